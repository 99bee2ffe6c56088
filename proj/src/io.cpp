#include "gsmix/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace gsmix {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(std::vector<std::string> header) : cols_(header.size()) {
  add_row(header);
}

void CsvWriter::add_row(const std::vector<std::string>& cells) {
  if (cells.size() != cols_) throw std::invalid_argument("csv row width mismatch");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) buf_ += ',';
    const std::string& c = cells[i];
    if (c.find_first_of(",\"\r\n") != std::string::npos) {
      buf_ += '"';
      for (char ch : c) {
        if (ch == '"') buf_ += '"';
        buf_ += ch;
      }
      buf_ += '"';
    } else {
      buf_ += c;
    }
  }
  buf_ += "\r\n";
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << content;
}

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

bool file_exists(const std::string& path) { return std::filesystem::exists(path); }

void ensure_dir(const std::string& path) { std::filesystem::create_directories(path); }

SharedCovMixture model_from_json(const nlohmann::json& spec) {
  if (spec.contains("file")) {
    return SharedCovMixture::deserialize(read_file(spec.at("file").get<std::string>()));
  }
  auto wj = spec.at("weights");
  int k = int(wj.size());
  Eigen::VectorXd w(k);
  for (int i = 0; i < k; ++i) w[i] = wj.at(i).get<double>();
  auto mj = spec.at("means");
  if (int(mj.size()) != k) throw std::invalid_argument("config: means/weights size mismatch");
  int d = int(mj.at(0).size());
  std::vector<Eigen::VectorXd> means(k, Eigen::VectorXd(d));
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < d; ++j) means[i][j] = mj.at(i).at(j).get<double>();
  Eigen::MatrixXd cov(d, d);
  auto cj = spec.at("covariance");
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) cov(i, j) = cj.at(i).at(j).get<double>();
  double diam = 0.0;
  if (spec.contains("diameter")) {
    diam = spec.at("diameter").get<double>();
  } else {
    for (const auto& m : means) diam = std::max(diam, m.norm());
  }
  return SharedCovMixture(w, means, cov, diam);
}

nlohmann::json model_to_json(const SharedCovMixture& m) {
  nlohmann::json j;
  j["weights"] = std::vector<double>(m.weights().data(), m.weights().data() + m.num_components());
  std::vector<std::vector<double>> means;
  for (const auto& mu : m.means())
    means.emplace_back(mu.data(), mu.data() + mu.size());
  j["means"] = means;
  std::vector<std::vector<double>> cov(m.dim(), std::vector<double>(m.dim()));
  for (int i = 0; i < m.dim(); ++i)
    for (int jj = 0; jj < m.dim(); ++jj) cov[i][jj] = m.covariance()(i, jj);
  j["covariance"] = cov;
  j["diameter"] = m.diameter_bound();
  return j;
}

TemperatureSchedule schedule_from_json(const nlohmann::json& spec, const SharedCovMixture* model) {
  double diam = 0.0, lam = 0.0;
  if (spec.contains("schedule")) {
    diam = spec.at("schedule").at("diameter").get<double>();
    lam = spec.at("schedule").at("lambda_min").get<double>();
  } else if (model) {
    diam = model->diameter_bound();
    lam = model->lambda_min();
  } else {
    throw std::invalid_argument("config: no schedule and no model to derive one from");
  }
  if (model) {
    double mx = 0.0;
    for (const auto& m : model->means()) mx = std::max(mx, m.norm());
    if (diam < mx)
      throw std::invalid_argument("config: schedule diameter below the largest mean norm");
  }
  return TemperatureSchedule(diam, lam);
}

}  // namespace gsmix
