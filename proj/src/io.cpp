#include "pmode/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string_view>
#include <vector>

#include "pmode/error.hpp"

namespace pmode {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool parse_double(std::string_view field, double& out) {
  field = trim(field);
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  if (field.empty()) return false;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
  return ec == std::errc() && ptr == field.data() + field.size();
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

std::string at_line(std::size_t line) { return "line " + std::to_string(line) + ": "; }

} // namespace

Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw InvalidConfig("cannot open " + path.string());

  std::vector<double> values;
  std::vector<int> labels;
  std::size_t width = 0;
  std::size_t rows = 0;
  std::size_t line_no = 0;
  bool seen_first = false;
  std::string line;
  std::vector<double> parsed;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    parsed.assign(fields.size(), 0.0);
    bool numeric = true;
    std::size_t bad = 0;
    for (std::size_t f = 0; f < fields.size() && numeric; ++f) {
      if (!parse_double(fields[f], parsed[f])) {
        numeric = false;
        bad = f;
      }
    }
    if (!seen_first) {
      seen_first = true;
      if (!numeric) {
        width = fields.size();
        continue; // header
      }
    }
    if (!numeric)
      throw FormatError(at_line(line_no) + "cannot parse field " + std::to_string(bad + 1) +
                        " ('" + std::string(trim(fields[bad])) + "')");
    if (width == 0) width = fields.size();
    if (fields.size() != width)
      throw FormatError(at_line(line_no) + "expected " + std::to_string(width) + " fields, found " +
                        std::to_string(fields.size()));
    for (std::size_t f = 0; f < fields.size(); ++f)
      if (!std::isfinite(parsed[f]))
        throw FormatError(at_line(line_no) + "non-finite value in field " + std::to_string(f + 1));
    std::size_t features = fields.size();
    if (options.label_column) {
      if (fields.size() < 2) throw FormatError(at_line(line_no) + "label column leaves no features");
      const double lab = parsed.back();
      if (lab != std::floor(lab)) throw FormatError(at_line(line_no) + "label is not an integer");
      labels.push_back(static_cast<int>(lab));
      --features;
    }
    values.insert(values.end(), parsed.begin(), parsed.begin() + static_cast<std::ptrdiff_t>(features));
    ++rows;
  }
  if (rows == 0) throw FormatError(path.string() + ": no data rows");
  const std::size_t d = options.label_column ? width - 1 : width;
  return Dataset(rows, d, std::move(values), std::move(labels), path.filename().string());
}

Dataset read_cifar_batch(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidConfig("cannot open " + path.string());
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                         std::istreambuf_iterator<char>());
  if (bytes.empty() || bytes.size() % kCifarRecordBytes != 0)
    throw FormatError(path.string() + ": size " + std::to_string(bytes.size()) +
                      " is not a positive multiple of " + std::to_string(kCifarRecordBytes));
  const std::size_t n = bytes.size() / kCifarRecordBytes;
  std::vector<double> values(n * kCifarPixels);
  std::vector<int> labels(n);
  for (std::size_t r = 0; r < n; ++r) {
    const unsigned char* rec = bytes.data() + r * kCifarRecordBytes;
    if (rec[0] >= kCifarClasses)
      throw FormatError(path.string() + ": record " + std::to_string(r) + " has label " +
                        std::to_string(rec[0]));
    labels[r] = rec[0];
    double* dst = values.data() + r * kCifarPixels;
    for (std::size_t p = 0; p < kCifarPixels; ++p) dst[p] = static_cast<double>(rec[1 + p]) / 255.0;
  }
  return Dataset(n, kCifarPixels, std::move(values), std::move(labels), path.filename().string());
}

namespace {

Dataset rows_with_label(const Dataset& data, int label, bool keep) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < data.size(); ++i)
    if ((data.labels()[i] == label) == keep) idx.push_back(i);
  return data.subset(idx);
}

Dataset concat(const std::vector<Dataset>& parts) {
  std::vector<double> values;
  std::vector<int> labels;
  std::size_t n = 0;
  for (const auto& p : parts) {
    values.insert(values.end(), p.values().begin(), p.values().end());
    labels.insert(labels.end(), p.labels().begin(), p.labels().end());
    n += p.size();
  }
  return Dataset(n, kCifarPixels, std::move(values), std::move(labels), "cifar10");
}

} // namespace

CifarSplit load_cifar10(const std::filesystem::path& dir, int class_label) {
  if (class_label < 0 || class_label >= kCifarClasses)
    throw InvalidConfig("CIFAR-10 class label must be in 0..9");
  std::vector<Dataset> train_parts;
  for (int b = 1; b <= 5; ++b) {
    const auto p = dir / ("data_batch_" + std::to_string(b) + ".bin");
    if (std::filesystem::exists(p)) train_parts.push_back(read_cifar_batch(p));
  }
  if (train_parts.empty()) throw InvalidConfig("no data_batch_*.bin files in " + dir.string());
  const auto test_path = dir / "test_batch.bin";
  if (!std::filesystem::exists(test_path)) throw InvalidConfig("missing " + test_path.string());

  const Dataset train_all = concat(train_parts);
  const Dataset test = read_cifar_batch(test_path);
  CifarSplit split{rows_with_label(train_all, class_label, true),
                   rows_with_label(test, class_label, true),
                   rows_with_label(test, class_label, false)};
  if (split.train.empty()) throw InvalidConfig("no training records for the nominal class");
  if (split.test_nominal.empty() || split.test_anomalous.empty())
    throw InvalidConfig("test batch lacks nominal or anomalous records");
  return split;
}

nlohmann::json mixture_to_json(const MixtureDensity& mix) {
  nlohmann::json comps = nlohmann::json::array();
  for (std::size_t j = 0; j < mix.k(); ++j) {
    const Density* c = mix.component(j);
    if (!c) {
      comps.push_back(nullptr);
      continue;
    }
    if (const auto* g = std::get_if<GaussianDensity>(c)) {
      const auto d = static_cast<Eigen::Index>(g->dim());
      std::vector<double> mean(g->mean().data(), g->mean().data() + d);
      std::vector<std::vector<double>> cov(g->dim(), std::vector<double>(g->dim()));
      for (Eigen::Index a = 0; a < d; ++a)
        for (Eigen::Index b = 0; b < d; ++b)
          cov[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = g->covariance()(a, b);
      comps.push_back({{"type", "gaussian"}, {"mean", mean}, {"covariance", cov}});
    } else {
      const auto& kde = std::get<ProductKde>(*c);
      std::vector<std::vector<double>> centers(kde.dim());
      for (std::size_t i = 0; i < kde.dim(); ++i) {
        const auto col = kde.centers(i);
        centers[i].assign(col.begin(), col.end());
      }
      comps.push_back({{"type", "product_kde"},
                       {"bandwidths", std::vector<double>(kde.bandwidths().begin(), kde.bandwidths().end())},
                       {"centers_by_dim", centers}});
    }
  }
  return {{"weights", std::vector<double>(mix.weights().begin(), mix.weights().end())},
          {"components", comps}};
}

MixtureDensity mixture_from_json(const nlohmann::json& j) {
  try {
    auto weights = j.at("weights").get<std::vector<double>>();
    std::vector<MixtureDensity::ComponentPtr> comps;
    for (const auto& c : j.at("components")) {
      if (c.is_null()) {
        comps.push_back(nullptr);
        continue;
      }
      const auto type = c.at("type").get<std::string>();
      if (type == "gaussian") {
        const auto mean = c.at("mean").get<std::vector<double>>();
        const auto cov = c.at("covariance").get<std::vector<std::vector<double>>>();
        const auto d = static_cast<Eigen::Index>(mean.size());
        Eigen::VectorXd mu(d);
        Eigen::MatrixXd sigma(d, d);
        if (cov.size() != mean.size()) throw FormatError("covariance shape does not match mean");
        for (Eigen::Index a = 0; a < d; ++a) {
          mu[a] = mean[static_cast<std::size_t>(a)];
          if (cov[static_cast<std::size_t>(a)].size() != mean.size())
            throw FormatError("covariance shape does not match mean");
          for (Eigen::Index b = 0; b < d; ++b)
            sigma(a, b) = cov[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
        }
        comps.push_back(std::make_shared<const Density>(GaussianDensity(mu, sigma)));
      } else if (type == "product_kde") {
        const auto bw = c.at("bandwidths").get<std::vector<double>>();
        const auto centers = c.at("centers_by_dim").get<std::vector<std::vector<double>>>();
        if (centers.size() != bw.size() || centers.empty())
          throw FormatError("product kde centers do not match bandwidths");
        const std::size_t r = centers.front().size();
        std::vector<double> flat;
        flat.reserve(r * bw.size());
        for (const auto& col : centers) {
          if (col.size() != r) throw FormatError("ragged product kde centers");
          flat.insert(flat.end(), col.begin(), col.end());
        }
        comps.push_back(std::make_shared<const Density>(ProductKde(bw.size(), r, std::move(flat), bw)));
      } else {
        throw FormatError("unknown component type '" + type + "'");
      }
    }
    return MixtureDensity(std::move(weights), std::move(comps));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed model file: ") + e.what());
  }
}

} // namespace pmode
