// Copyright 2026 The qtraj Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "qtraj/filter_models.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "qtraj/detail/filter_steps.hpp"
#include "qtraj/error.hpp"

namespace qtraj {

namespace {

class FilterModelBase : public TrajectoryModel {
 public:
  virtual HierarchyState state() const = 0;
};

template <class Mat>
double pairing_defect(const Mat& a, const Mat& b) {
  return std::sqrt((a.adjoint() - b).cwiseAbs2().maxCoeff());
}

inline double distance_to_one(Complex z) {
  return std::sqrt(std::norm(z - Complex(1.0, 0.0)));
}

template <class Mat>
class Observables {
 public:
  explicit Observables(const std::vector<NamedObservable>& obs) {
    for (const auto& o : obs) {
      names_.push_back(o.name);
      ops_.push_back(Mat(o.op));
    }
  }
  const std::vector<std::string>& names() const { return names_; }

  // rho must already be normalized.
  void eval(const Mat& rho, std::span<double> out) const {
    for (std::size_t i = 0; i < ops_.size(); ++i)
      out[i] = (rho.cwiseProduct(ops_[i].transpose())).sum().real();
  }

 private:
  std::vector<std::string> names_;
  std::vector<Mat> ops_;
};

[[noreturn]] void vanishing(double t, double intensity) {
  std::ostringstream os;
  os << "count recorded at t = " << t << " while the intensity " << intensity
     << " is below the floor (inconsistent record)";
  throw StepError(os.str(), 0);
}

// ---------------------------------------------------------------------------

template <class Mat>
class VacuumModel final : public FilterModelBase {
 public:
  explicit VacuumModel(const FilterModelSpec& spec)
      : scheme_(spec.measurement), obs_(spec.observables) {
    if (spec.timed_system) timed_ = *spec.timed_system;
    const SlhTriple g = timed_ ? timed_->at(0.0) : spec.system;
    cache_.reset(g.S, g.L, g.H);
    rho0_ = Mat(projector(spec.eta));
    rho_ = rho0_;
  }

  MeasurementKind scheme() const override { return scheme_.kind; }
  std::vector<std::string> observable_names() const override { return obs_.names(); }

  void reset(double t0) override {
    rho_ = rho0_;
    coupling_t_ = std::nan("");
    couple(t0);
  }

  double record_rate(double t) const override {
    couple(t);
    if (scheme_.kind == MeasurementKind::homodyne) return (cache_.LpLd * rho_).trace().real();
    return (rho_ * cache_.LdL).trace().real();
  }

  void advance(double t, double dt, double dY) override {
    couple(t);
    if (scheme_.kind == MeasurementKind::homodyne) {
      const double k = (cache_.LpLd * rho_).trace().real();
      detail::vacuum_homodyne_apply(cache_, k, rho_, dY - k * dt, dt);
    } else {
      detail::vacuum_counting_update(cache_, rho_, static_cast<int>(dY), dt,
                                     scheme_.intensity_floor);
    }
  }

  void observe(std::span<double> out) const override {
    const Mat rho = rho_ / rho_.trace();
    obs_.eval(rho, out);
  }

  InvariantDeviation invariant_deviation() const override {
    return {distance_to_one(rho_.trace()), pairing_defect(rho_, rho_)};
  }

  HierarchyState state() const override {
    HierarchyState s;
    s.kind = HierarchyKind::vacuum;
    s.n = 1;
    s.blocks = {Operator(rho_)};
    return s;
  }

 private:
  void couple(double t) const {
    if (!timed_ || t == coupling_t_) return;
    cache_.reset_coupling(timed_->L(t), timed_->H(t));
    coupling_t_ = t;
  }

  MeasurementScheme scheme_;
  Observables<Mat> obs_;
  std::optional<TimedSlhTriple> timed_;
  mutable detail::SystemCache<Mat> cache_;
  mutable double coupling_t_ = std::nan("");
  Mat rho0_, rho_;
};

// ---------------------------------------------------------------------------
// Photon and cat models share one scalar across all blocks: the record rate
// predicted by the weighted conditional state. For a pure single photon it is
// K_t / nu_t; for mixtures it keeps sum w tr rho = 1 exactly and makes the
// filter innovation the true one.

template <class Mat>
class PhotonModel final : public FilterModelBase {
 public:
  PhotonModel(const FilterModelSpec& spec, const PhotonCombination& field)
      : scheme_(spec.measurement), obs_(spec.observables), xi_(field.xi) {
    cache_.reset(spec.system.S, spec.system.L, spec.system.H);
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k) w_[2 * j + k] = field.gamma.gamma(k, j);
    const Mat p = Mat(projector(spec.eta));
    init_ = {p, Mat::Zero(p.rows(), p.cols()), Mat::Zero(p.rows(), p.cols()), p};
    r_ = init_;
  }

  MeasurementKind scheme() const override { return scheme_.kind; }
  std::vector<std::string> observable_names() const override { return obs_.names(); }

  void reset(double) override {
    r_ = init_;
    xi_t_ = std::nan("");
  }

  double record_rate(double t) const override {
    const Complex xi = xi_at(t);
    std::span<const Mat, 4> rc(r_.data(), 4);
    const auto tr = scheme_.kind == MeasurementKind::homodyne
                        ? detail::photon_homodyne_linear_traces(cache_, xi, rc)
                        : detail::photon_counting_linear_traces(cache_, xi, rc);
    Complex num{0.0, 0.0}, den{0.0, 0.0};
    for (int b = 0; b < 4; ++b) {
      if (w_[b] == Complex(0.0, 0.0)) continue;
      num += w_[b] * tr[b];
      den += w_[b] * r_[b].trace();
    }
    return (num / den).real();
  }

  void advance(double t, double dt, double dY) override {
    const Complex xi = xi_at(t);
    std::span<Mat, 4> r(r_.data(), 4);
    const double rate = record_rate(t);
    if (scheme_.kind == MeasurementKind::homodyne) {
      detail::photon_homodyne_apply(cache_, xi, rate, r, dY - rate * dt, dt);
    } else {
      if (dY != 0.0 && rate < scheme_.intensity_floor) vanishing(t, rate);
      detail::photon_counting_apply(cache_, xi, rate, r, static_cast<int>(dY), dt);
    }
  }

  void observe(std::span<double> out) const override { obs_.eval(combined(), out); }

  InvariantDeviation invariant_deviation() const override {
    InvariantDeviation d;
    Complex den{0.0, 0.0};
    for (int b = 0; b < 4; ++b) den += w_[b] * r_[b].trace();
    d.trace = std::max(distance_to_one(den), distance_to_one(combined().trace()));
    d.pairing = std::max({pairing_defect(r_[0], r_[0]), pairing_defect(r_[3], r_[3]),
                          pairing_defect(r_[1], r_[2])});
    return d;
  }

  HierarchyState state() const override {
    HierarchyState s;
    s.kind = HierarchyKind::photon;
    s.n = 2;
    for (const auto& b : r_) s.blocks.push_back(Operator(b));
    return s;
  }

 private:
  Complex xi_at(double t) const {
    if (t != xi_t_) {
      xi_val_ = xi_(t);
      xi_t_ = t;
    }
    return xi_val_;
  }

  Mat combined() const {
    Mat num = Mat::Zero(r_[0].rows(), r_[0].cols());
    Complex den{0.0, 0.0};
    for (int b = 0; b < 4; ++b) {
      if (w_[b] == Complex(0.0, 0.0)) continue;
      num += w_[b] * r_[b];
      den += w_[b] * r_[b].trace();
    }
    if (std::abs(den) < 1e-12) throw InvariantError("conditional normalization collapse");
    return num / den;
  }

  MeasurementScheme scheme_;
  Observables<Mat> obs_;
  Wavepacket xi_;
  detail::SystemCache<Mat> cache_;
  std::array<Complex, 4> w_{};
  std::array<Mat, 4> init_, r_;
  mutable double xi_t_ = std::nan("");
  mutable Complex xi_val_{0.0, 0.0};
};

// ---------------------------------------------------------------------------

template <class Mat>
class CatModel final : public FilterModelBase {
 public:
  CatModel(const FilterModelSpec& spec, const CoherentCombination& field)
      : scheme_(spec.measurement),
        obs_(spec.observables),
        amps_(field.amps),
        n_(field.amps.size()),
        w_(field.gamma.gamma),
        alpha_(n_) {
    cache_.reset(spec.system.S, spec.system.L, spec.system.H);
    const Mat p = Mat(projector(spec.eta));
    for (std::size_t j = 0; j < n_; ++j)
      for (std::size_t k = 0; k < n_; ++k)
        init_.push_back(field.gram(static_cast<long>(j), static_cast<long>(k)) * p);
    r_ = init_;
  }

  MeasurementKind scheme() const override { return scheme_.kind; }
  std::vector<std::string> observable_names() const override { return obs_.names(); }

  void reset(double) override {
    r_ = init_;
    alpha_t_ = std::nan("");
  }

  double record_rate(double t) const override {
    load_alpha(t);
    const bool homodyne = scheme_.kind == MeasurementKind::homodyne;
    Complex num{0.0, 0.0}, den{0.0, 0.0};
    for (std::size_t j = 0; j < n_; ++j)
      for (std::size_t k = 0; k < n_; ++k) {
        const Complex g = w_(static_cast<long>(j), static_cast<long>(k));
        if (g == Complex(0.0, 0.0)) continue;
        const Mat& rho = r_[j * n_ + k];
        const Complex a = alpha_[j], b = alpha_[k];
        num += g * (homodyne ? detail::cat_homodyne_linear_trace(cache_, a, b, rho)
                             : detail::cat_counting_linear_trace(cache_, a, b, rho));
        den += g * rho.trace();
      }
    return (num / den).real();
  }

  void advance(double t, double dt, double dY) override {
    load_alpha(t);
    const double rate = record_rate(t);
    if (scheme_.kind == MeasurementKind::homodyne) {
      detail::cat_homodyne_apply<Mat>(cache_, alpha_, rate, r_, dY - rate * dt, dt);
    } else {
      if (dY != 0.0 && rate < scheme_.intensity_floor) vanishing(t, rate);
      detail::cat_counting_apply<Mat>(cache_, alpha_, rate, r_, static_cast<int>(dY), dt);
    }
  }

  void observe(std::span<double> out) const override { obs_.eval(combined(), out); }

  InvariantDeviation invariant_deviation() const override {
    InvariantDeviation d;
    Complex s{0.0, 0.0};
    for (std::size_t j = 0; j < n_; ++j)
      for (std::size_t k = 0; k < n_; ++k)
        s += w_(static_cast<long>(j), static_cast<long>(k)) * r_[j * n_ + k].trace();
    d.trace = std::max(distance_to_one(s), distance_to_one(combined().trace()));
    for (std::size_t j = 0; j < n_; ++j)
      for (std::size_t k = j; k < n_; ++k)
        d.pairing = std::max(d.pairing, pairing_defect(r_[j * n_ + k], r_[k * n_ + j]));
    return d;
  }

  HierarchyState state() const override {
    HierarchyState s;
    s.kind = HierarchyKind::cat;
    s.n = static_cast<int>(n_);
    for (const auto& b : r_) s.blocks.push_back(Operator(b));
    return s;
  }

 private:
  void load_alpha(double t) const {
    if (t == alpha_t_) return;
    amps_.values(t, alpha_);
    alpha_t_ = t;
  }

  Mat combined() const {
    Mat num = Mat::Zero(r_[0].rows(), r_[0].cols());
    Complex den{0.0, 0.0};
    for (std::size_t j = 0; j < n_; ++j)
      for (std::size_t k = 0; k < n_; ++k) {
        const Complex g = w_(static_cast<long>(j), static_cast<long>(k));
        if (g == Complex(0.0, 0.0)) continue;
        num += g * r_[j * n_ + k];
        den += g * r_[j * n_ + k].trace();
      }
    if (std::abs(den) < 1e-12) throw InvariantError("conditional normalization collapse");
    return num / den;
  }

  MeasurementScheme scheme_;
  Observables<Mat> obs_;
  CoherentAmplitudes amps_;
  std::size_t n_;
  Eigen::MatrixXcd w_;
  detail::SystemCache<Mat> cache_;
  std::vector<Mat> init_, r_;
  mutable std::vector<Complex> alpha_;
  mutable double alpha_t_ = std::nan("");
};

// ---------------------------------------------------------------------------

template <class Mat>
std::unique_ptr<TrajectoryModel> build(const FilterModelSpec& spec) {
  if (std::holds_alternative<VacuumField>(spec.field))
    return std::make_unique<VacuumModel<Mat>>(spec);
  if (const auto* p = std::get_if<PhotonCombination>(&spec.field))
    return std::make_unique<PhotonModel<Mat>>(spec, *p);
  return std::make_unique<CatModel<Mat>>(spec, std::get<CoherentCombination>(spec.field));
}

void validate_spec(const FilterModelSpec& spec) {
  spec.measurement.validate();
  long dim = 0;
  if (spec.timed_system) {
    if (!std::holds_alternative<VacuumField>(spec.field))
      throw InvariantError("time-dependent systems are only supported with a vacuum field");
    dim = spec.timed_system->dim;
    spec.timed_system->at(0.0).validate();
  } else {
    spec.system.validate();
    dim = spec.system.dim();
  }
  if (spec.eta.size() != dim) throw DimensionError("initial state", spec.eta.size(), dim);
  if (std::abs(spec.eta.norm() - 1.0) > 1e-9)
    throw InvariantError("initial state is not normalized");
  for (const auto& o : spec.observables)
    if (o.op.rows() != dim || o.op.cols() != dim)
      throw DimensionError("observable '" + o.name + "'", o.op.rows(), dim);
}

}  // namespace

std::unique_ptr<TrajectoryModel> make_filter_model(const FilterModelSpec& spec) {
  validate_spec(spec);
  const long dim = spec.timed_system ? spec.timed_system->dim : spec.system.dim();
  if (dim == 2) return build<Eigen::Matrix2cd>(spec);
  if (dim == 4) return build<Eigen::Matrix4cd>(spec);
  return build<Eigen::MatrixXcd>(spec);
}

ModelFactory make_filter_model_factory(FilterModelSpec spec) {
  validate_spec(spec);
  auto shared = std::make_shared<const FilterModelSpec>(std::move(spec));
  return [shared] { return make_filter_model(*shared); };
}

HierarchyState filter_model_state(const TrajectoryModel& model) {
  const auto* m = dynamic_cast<const FilterModelBase*>(&model);
  if (!m) throw InvariantError("filter_model_state: not a filter model");
  return m->state();
}

}  // namespace qtraj
