#include "adgen/prompts.hpp"

#include <array>
#include <utility>

#include "adgen/errors.hpp"
#include "adgen/text.hpp"

namespace adgen::prompts {

namespace {

struct Asset {
    std::string_view name;
    std::string_view body;
};

constexpr Asset kAssets[] = {
#include "prompt_assets.inc"
};

}  // namespace

std::string_view asset(std::string_view name) {
    for (const auto& a : kAssets) {
        if (a.name == name) return a.body;
    }
    throw InvalidArgument("unknown prompt asset '" + std::string(name) + "'");
}

std::vector<std::string> asset_names() {
    std::vector<std::string> names;
    for (const auto& a : kAssets) names.emplace_back(a.name);
    return names;
}

std::string fill(std::string_view tmpl, const std::map<std::string, std::string>& values) {
    std::string out;
    out.reserve(tmpl.size() + 64);
    for (std::size_t i = 0; i < tmpl.size(); ++i) {
        const char c = tmpl[i];
        if (c == '{' && i + 1 < tmpl.size() && tmpl[i + 1] == '{') {
            out.push_back('{');
            ++i;
        } else if (c == '}' && i + 1 < tmpl.size() && tmpl[i + 1] == '}') {
            out.push_back('}');
            ++i;
        } else if (c == '{') {
            const std::size_t close = tmpl.find('}', i);
            if (close == std::string_view::npos) throw InvalidArgument("unterminated placeholder in template");
            const std::string key(tmpl.substr(i + 1, close - i - 1));
            const auto it = values.find(key);
            if (it == values.end()) throw InvalidArgument("no value for placeholder {" + key + "}");
            out += it->second;
            i = close;
        } else {
            out.push_back(c);
        }
    }
    return out;
}

std::string profile_product(std::string_view title, std::string_view category) {
    return fill(asset("profile_product"), {{"title", std::string(title)}, {"category", std::string(category)}});
}

std::string describe_scene(std::string_view room_display, std::string_view style) {
    return fill(asset("describe_scene"),
                {{"room type", std::string(room_display)}, {"generation style", std::string(style)}});
}

std::string layout_system() { return fill(asset("layout_system"), {}); }

std::string layout_user(std::string_view product_1, double aspect_1, std::string_view product_2, double aspect_2,
                        std::string_view layout_prompt) {
    return fill(asset("layout_user"), {{"product-1", std::string(product_1)},
                                       {"product-2", std::string(product_2)},
                                       {"aspect-ratio-1", text::format_fixed(aspect_1, 3)},
                                       {"aspect-ratio-2", text::format_fixed(aspect_2, 3)},
                                       {"layout-prompt", std::string(layout_prompt)}});
}

std::string judge_system(std::string_view asset_name, bool som) {
    std::string body(asset(asset_name));
    if (!som) return body;
    const std::size_t end = body.find(". ");
    if (end == std::string::npos) return body + " " + std::string(asset("som_sentence"));
    return body.substr(0, end + 1) + " " + std::string(asset("som_sentence")) + body.substr(end + 1);
}

}  // namespace adgen::prompts
