#include "dflab/report.hpp"

#include <algorithm>
#include <cmath>

namespace dflab {

std::string to_string(Status s) {
  switch (s) {
    case Status::pass: return "pass";
    case Status::fail: return "fail";
    case Status::inconclusive: return "inconclusive";
  }
  return "fail";
}

Check sigma_check(std::string name, double estimate, double stderr_, double target,
                  double n_sigma) {
  Check c;
  c.name = std::move(name);
  c.estimate = estimate;
  c.stderr_ = stderr_;
  c.target = target;
  c.tolerance = stderr_ > 0.0 ? n_sigma * stderr_ : 1e-12 * std::max(1.0, std::abs(target));
  const bool ok = std::isfinite(estimate) && std::abs(estimate - target) <= c.tolerance;
  c.status = ok ? Status::pass : Status::fail;
  return c;
}

Check zero_check(std::string name, const Moments& diff, double n_sigma) {
  return sigma_check(std::move(name), diff.mean(), diff.stderr_mean(), 0.0, n_sigma);
}

Check abs_check(std::string name, double estimate, double target, double tol) {
  Check c;
  c.name = std::move(name);
  c.estimate = estimate;
  c.target = target;
  c.tolerance = tol;
  c.status = std::isfinite(estimate) && std::abs(estimate - target) <= tol ? Status::pass
                                                                            : Status::fail;
  return c;
}

Check upper_check(std::string name, double estimate, double bound, double stderr_) {
  Check c;
  c.name = std::move(name);
  c.estimate = estimate;
  c.stderr_ = stderr_;
  c.target = bound;
  c.tolerance = 0.0;
  c.status = std::isfinite(estimate) && estimate <= bound ? Status::pass : Status::fail;
  return c;
}

Check lower_check(std::string name, double estimate, double bound) {
  Check c;
  c.name = std::move(name);
  c.estimate = estimate;
  c.target = bound;
  c.status = std::isfinite(estimate) && estimate > bound ? Status::pass : Status::fail;
  return c;
}

bool Report::passed() const { return count(Status::fail) == 0; }

std::size_t Report::count(Status s) const {
  return static_cast<std::size_t>(
      std::count_if(checks.begin(), checks.end(), [s](const Check& c) { return c.status == s; }));
}

const Check* Report::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

void Report::append(const Report& other, const std::string& prefix) {
  for (auto c : other.checks) {
    c.name = prefix + c.name;
    checks.push_back(std::move(c));
  }
}

nlohmann::json Report::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& c : checks) {
    nlohmann::json r = {{"name", c.name},           {"estimate", c.estimate},
                        {"stderr", c.stderr_},      {"target", c.target},
                        {"tolerance", c.tolerance}, {"status", to_string(c.status)}};
    if (!c.note.empty()) r["note"] = c.note;
    rows.push_back(std::move(r));
  }
  nlohmann::json j = {{"task", task},
                      {"checks", rows},
                      {"summary",
                       {{"pass", count(Status::pass)},
                        {"fail", count(Status::fail)},
                        {"inconclusive", count(Status::inconclusive)}}}};
  if (!extra.empty()) j["data"] = extra;
  return j;
}

double ks_two_sample(std::vector<double>& a, std::vector<double>& b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double ks_critical(std::size_t n, std::size_t m, double alpha) {
  const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
  const double nn = static_cast<double>(n), mm = static_cast<double>(m);
  return c * std::sqrt((nn + mm) / (nn * mm));
}

}  // namespace dflab
