#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "p2lab/error.hpp"
#include "p2lab/mesh.hpp"

namespace p2lab {

enum class WeightTarget { domain, boundary };

/// Nonnegative weight a(x) on the domain or b(x) on the boundary.
/// Sampled once per element/facet at the barycenter.
class WeightField {
 public:
  enum class Kind { constant, affine, per_element };

  static WeightField constant(double value, WeightTarget target = WeightTarget::domain) {
    if (!(value >= 0.0) || !std::isfinite(value))
      fail(ErrorKind::invalid_weight, "constant weight must be finite and nonnegative, got " + std::to_string(value));
    WeightField w(Kind::constant, target);
    w.coefficients_ = {value};
    return w;
  }

  /// max(0, c0 + c1*x + c2*y); missing coefficients are zero.
  static WeightField affine(std::vector<double> coefficients, WeightTarget target = WeightTarget::domain) {
    if (coefficients.empty() || coefficients.size() > 3)
      fail(ErrorKind::invalid_weight, "affine weight takes 1 to 3 coefficients");
    for (double c : coefficients)
      if (!std::isfinite(c)) fail(ErrorKind::invalid_weight, "affine coefficient is not finite");
    coefficients.resize(3, 0.0);
    WeightField w(Kind::affine, target);
    w.coefficients_ = std::move(coefficients);
    return w;
  }

  /// One value per element (domain) or per boundary facet (boundary).
  static WeightField per_element(std::vector<double> values, WeightTarget target = WeightTarget::domain) {
    for (std::size_t i = 0; i < values.size(); ++i)
      if (!(values[i] >= 0.0) || !std::isfinite(values[i]))
        fail(ErrorKind::invalid_weight, "per-element weight " + std::to_string(i) + " is negative or not finite");
    WeightField w(Kind::per_element, target);
    w.values_ = std::move(values);
    return w;
  }

  Kind kind() const noexcept { return kind_; }
  WeightTarget target() const noexcept { return target_; }
  const std::vector<double>& coefficients() const noexcept { return coefficients_; }
  const std::vector<double>& values() const noexcept { return values_; }

  /// Per-element (domain) or per-facet (boundary) samples for this mesh.
  std::vector<double> sample(const Mesh& mesh) const {
    const bool on_boundary = target_ == WeightTarget::boundary;
    const int count = on_boundary ? mesh.num_facets() : mesh.num_elements();
    if (kind_ == Kind::per_element && static_cast<int>(values_.size()) != count)
      fail(ErrorKind::invalid_weight, std::string("per-element weight has ") + std::to_string(values_.size()) +
                                          " values but the mesh has " + std::to_string(count) +
                                          (on_boundary ? " boundary facets" : " elements"));
    std::vector<double> out(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
      double v = 0.0;
      switch (kind_) {
        case Kind::constant: v = coefficients_[0]; break;
        case Kind::per_element: v = values_[static_cast<std::size_t>(i)]; break;
        case Kind::affine: {
          const Point x = on_boundary ? mesh.facet_barycenter(i) : mesh.element_barycenter(i);
          v = std::max(0.0, coefficients_[0] + coefficients_[1] * x[0] + coefficients_[2] * x[1]);
          break;
        }
      }
      if (!(v >= 0.0)) fail(ErrorKind::invalid_weight, "weight sample " + std::to_string(i) + " is negative");
      out[static_cast<std::size_t>(i)] = v;
    }
    return out;
  }

 private:
  WeightField(Kind kind, WeightTarget target) : kind_(kind), target_(target) {}

  Kind kind_;
  WeightTarget target_;
  std::vector<double> coefficients_;
  std::vector<double> values_;
};

/// Reads one value per line (blank lines and '#' comments ignored).
inline std::vector<double> load_weight_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open weight file " + path.string());
  std::vector<double> values;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    const std::string tok = line.substr(first, last - first + 1);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size())
      fail(ErrorKind::parse, path.string() + ": line " + std::to_string(number) + ": cannot parse '" + tok + "'");
    values.push_back(v);
  }
  return values;
}

}  // namespace p2lab
