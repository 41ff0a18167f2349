#pragma once

#include <string_view>

#include <json.hpp>

namespace adgen {

/// Extracts the first balanced JSON object from free-form model output.
/// Tolerates code fences, leading prose and trailing text; candidates that
/// balance but do not parse are skipped. Throws UnparseableModelOutput.
nlohmann::json parse_json_answer(std::string_view raw);

}  // namespace adgen
