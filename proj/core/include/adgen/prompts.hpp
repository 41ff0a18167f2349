#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace adgen::prompts {

/// Bundled prompt asset by name (file stem under core/prompts/). Throws
/// InvalidArgument for unknown names.
std::string_view asset(std::string_view name);
std::vector<std::string> asset_names();

/// str.format-style fill: `{key}` is substituted, `{{` and `}}` collapse to
/// single braces. Unknown placeholders throw InvalidArgument.
std::string fill(std::string_view tmpl, const std::map<std::string, std::string>& values);

std::string profile_product(std::string_view title, std::string_view category);
std::string describe_scene(std::string_view room_display, std::string_view style);
std::string layout_system();
std::string layout_user(std::string_view product_1, double aspect_1, std::string_view product_2, double aspect_2,
                        std::string_view layout_prompt);

/// Judge system prompt for `asset_name`, with the Set-of-Mark sentence placed
/// after the first sentence when `som` is set.
std::string judge_system(std::string_view asset_name, bool som);

}  // namespace adgen::prompts
