#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "gsmix/mixture.hpp"
#include "gsmix/schedule.hpp"

namespace gsmix {

inline constexpr const char* kVersionString = "gsmix-0.1.0";

std::string format_double(double v);  // round-trip exact for finite doubles

// RFC-4180 style table: comma separated, CRLF line endings
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);
  void add_row(const std::vector<std::string>& cells);
  const std::string& content() const { return buf_; }

 private:
  std::size_t cols_;
  std::string buf_;
};

void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);
bool file_exists(const std::string& path);
void ensure_dir(const std::string& path);

SharedCovMixture model_from_json(const nlohmann::json& spec);
nlohmann::json model_to_json(const SharedCovMixture& m);
TemperatureSchedule schedule_from_json(const nlohmann::json& spec, const SharedCovMixture* model);

}  // namespace gsmix
