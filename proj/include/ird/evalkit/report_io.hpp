#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "ird/evalkit/aggregate.hpp"
#include "ird/evalkit/ap.hpp"

namespace ird::eval {

// One record per line: image hx1 hy1 hx2 hy2 ox1 oy1 ox2 oy2 object relation score
void write_predictions(std::ostream& os, const std::vector<PredictionRecord>& preds);
std::vector<PredictionRecord> read_predictions(std::istream& is);

// Flat "key value" lines (NA for absent metrics) followed by one
// "class <id> <object> <relation> <ap>" line per evaluated class.
void write_report(std::ostream& os, const EvalReport& r, const std::vector<world::HoiClass>& class_table);
EvalReport read_report(std::istream& is);

nlohmann::json report_json(const EvalReport& r, const std::vector<world::HoiClass>& class_table);

std::string format_metric(const Metric& m);

}  // namespace ird::eval
