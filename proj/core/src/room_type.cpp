#include "adgen/room_type.hpp"

#include <algorithm>
#include <cctype>

#include "adgen/errors.hpp"

namespace adgen {

std::string to_string(RoomType room) {
    switch (room) {
        case RoomType::living_room: return "living_room";
        case RoomType::bedroom: return "bedroom";
        case RoomType::kitchen: return "kitchen";
        case RoomType::bathroom: return "bathroom";
    }
    return "living_room";
}

std::string display_name(RoomType room) {
    switch (room) {
        case RoomType::living_room: return "living room";
        case RoomType::bedroom: return "bedroom";
        case RoomType::kitchen: return "kitchen";
        case RoomType::bathroom: return "bathroom";
    }
    return "living room";
}

namespace {

std::string letters_only_lower(std::string_view text) {
    std::string out;
    for (char c : text) {
        if (std::isalpha(static_cast<unsigned char>(c))) {
            out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        }
    }
    return out;
}

}  // namespace

RoomType parse_room_type(std::string_view text) {
    const std::string key = letters_only_lower(text);
    for (RoomType room : kAllRoomTypes) {
        if (key == letters_only_lower(to_string(room))) return room;
    }
    throw InvalidArgument("unknown room type '" + std::string(text) +
                          "'; valid values: living_room, bedroom, kitchen, bathroom");
}

std::optional<RoomType> normalize_room_answer(std::string_view answer) {
    const std::string key = letters_only_lower(answer);
    if (key.find("living") != std::string::npos || key.find("lounge") != std::string::npos) {
        return RoomType::living_room;
    }
    if (key.find("bedroom") != std::string::npos) return RoomType::bedroom;
    if (key.find("kitchen") != std::string::npos) return RoomType::kitchen;
    if (key.find("bath") != std::string::npos) return RoomType::bathroom;
    return std::nullopt;
}

}  // namespace adgen
