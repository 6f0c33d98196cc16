#include "avsync/capture.hpp"

#include <sstream>

#include <nlohmann/json.hpp>

#include "avsync/error.hpp"
#include "file_io.hpp"

namespace avsync {

using nlohmann::json;

std::string serialize_captures_jsonl(
    const std::vector<CaptureRecord>& captures) {
  std::string out;
  for (const auto& cap : captures) {
    json j;
    j["label"] = cap.label;
    j["requested_time"] = cap.requested_time;
    j["displayed_counter"] = cap.displayed_counter;
    out += j.dump();
    out += "\n";
  }
  return out;
}

std::vector<CaptureRecord> parse_captures_jsonl(const std::string& text) {
  std::vector<CaptureRecord> out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      json j = json::parse(line);
      CaptureRecord cap;
      cap.label = j.value("label", "");
      cap.requested_time = j.at("requested_time").get<double>();
      cap.displayed_counter = j.at("displayed_counter").get<int>();
      out.push_back(std::move(cap));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kParseError,
                  "captures line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void write_captures(const std::vector<CaptureRecord>& captures,
                    const std::string& path) {
  detail::atomic_write_file(path, serialize_captures_jsonl(captures));
}

std::vector<CaptureRecord> read_captures(const std::string& path) {
  return parse_captures_jsonl(detail::read_file(path));
}

}  // namespace avsync
