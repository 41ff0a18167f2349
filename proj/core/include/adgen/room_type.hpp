#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace adgen {

enum class RoomType { living_room, bedroom, kitchen, bathroom };

inline constexpr std::array<RoomType, 4> kAllRoomTypes = {RoomType::living_room, RoomType::bedroom,
                                                          RoomType::kitchen, RoomType::bathroom};

/// Identifier form: "living_room", "bedroom", ...
std::string to_string(RoomType room);
/// Prose form used inside prompts: "living room", "bedroom", ...
std::string display_name(RoomType room);

/// Strict parse of the identifier form (also accepts the prose form). Throws
/// InvalidArgument listing the four valid values.
RoomType parse_room_type(std::string_view text);

/// Tolerant mapping of a free-text model answer ("Living Room.", "the
/// bedroom") onto the enum.
std::optional<RoomType> normalize_room_answer(std::string_view answer);

}  // namespace adgen
