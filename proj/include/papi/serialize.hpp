#pragma once

#include <string>

#include "papi/pathway.hpp"
#include "papi/regularization.hpp"
#include "papi/router.hpp"
#include "papi/tasks.hpp"

namespace papi {

// Versioned JSON envelope {format, version, kind, payload}. Loads reject a
// wrong format tag, an unknown version, or a mismatched kind, and all floats
// survive a round trip bit-exactly.

std::string store_to_json(const PathwayLayout& layout, const ParamStore& store);
void store_from_json(const std::string& text, PathwayLayout& layout, ParamStore& store);

std::string router_to_json(const Router& router);
Router router_from_json(const std::string& text);

std::string fisher_to_json(const FisherInfo& fisher);
FisherInfo fisher_from_json(const std::string& text);

std::string task_snapshot_to_json(const TaskSnapshot& snapshot);
TaskSnapshot task_snapshot_from_json(const std::string& text);

std::string stream_to_json(const TaskStream& stream);
TaskStream stream_from_json(const std::string& text);

// whole-file helpers; IoError on filesystem failure
void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace papi
