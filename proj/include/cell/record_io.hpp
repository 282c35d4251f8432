#pragma once

// JSON form of explanation records and search configs. Keys are emitted in
// sorted order so the same record always serializes to the same bytes.

#include <string>

#include "json.hpp"

#include "cell/types.hpp"

namespace cell {

nlohmann::json config_to_json(const SearchConfig& config);
SearchConfig config_from_json(const nlohmann::json& j);

nlohmann::json record_to_json(const ExplanationRecord& record);

// Throws Error(kMalformedResponse) on a missing or mistyped field.
ExplanationRecord record_from_json(const nlohmann::json& j);

// A row that could not be searched at all (bad input line, empty prompt).
nlohmann::json diagnostic_row(const std::string& id, int line, const std::string& message);

std::string to_jsonl_line(const nlohmann::json& j);

}  // namespace cell
