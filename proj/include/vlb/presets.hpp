#ifndef VLB_PRESETS_HPP
#define VLB_PRESETS_HPP

#include <cmath>
#include <string>
#include <vector>

#include "density.hpp"
#include "schedule.hpp"

namespace vlb {

inline std::vector<std::string> density_preset_names() {
  return {"gauss", "gauss4", "gauss-shift", "gmm2", "gmm2-alt", "bimodal", "gauss2d", "gmm2d", "uniform256"};
}

inline ToyDensity density_preset(const std::string& name) {
  if (name == "gauss") return GaussianMixture::normal(1);
  if (name == "gauss4") return GaussianMixture::normal(1, 0.0, 4.0);
  if (name == "gauss-shift") return GaussianMixture::normal(1, 1.0, 1.0);
  if (name == "gmm2") return GaussianMixture{{0.5, 0.5}, {{-1.0}, {1.0}}, {0.5, 0.5}};
  if (name == "gmm2-alt") return GaussianMixture{{0.4, 0.6}, {{-0.8}, {1.1}}, {0.6, 0.45}};
  if (name == "bimodal") return GaussianMixture{{0.5, 0.5}, {{-2.0}, {2.0}}, {0.04, 0.04}};
  if (name == "gauss2d") return GaussianMixture::normal(2);
  if (name == "gmm2d") return GaussianMixture{{0.5, 0.5}, {{-1.0, 0.5}, {1.0, -0.5}}, {0.5, 0.3}};
  if (name == "uniform256") return QuantizedGrid::uniform_source(256);
  throw ConfigError("unknown density preset '" + name + "'");
}

// Second density paired with a preset for two-sample identities.
inline std::string partner_preset(const std::string& name) {
  if (name == "gauss") return "gauss-shift";
  if (name == "gmm2") return "gmm2-alt";
  if (name == "gauss4") return "gauss";
  if (name == "gauss2d") return "gmm2d";
  return "gauss";
}

struct ScheduleSpec {
  std::string regime = "vp";
  std::string family = "sigmoid";
  double a = 1.0;
  double eta0 = -8.7;
  double eta1 = 5.0;
};

inline Regime parse_regime(const std::string& s) {
  if (s == "vp") return Regime::VP;
  if (s == "sp") return Regime::SP;
  if (s == "ve") return Regime::VE;
  throw ConfigError("unknown regime '" + s + "'");
}

inline VarianceFamily parse_family(const std::string& s, double a) {
  if (s == "sigmoid") return VarianceFamily::sigmoid();
  if (s == "gsig") return VarianceFamily::generalized(a);
  if (s == "tanh") return VarianceFamily::tanh_squash();
  if (s == "exp") return VarianceFamily::ve_exponential();
  throw ConfigError("unknown variance family '" + s + "'");
}

// "vp-sigmoid", "sp-tanh", "vp-gsig0.5", "ve" and similar.
inline ScheduleSpec parse_schedule_name(const std::string& name) {
  ScheduleSpec spec;
  auto dash = name.find('-');
  spec.regime = name.substr(0, dash);
  parse_regime(spec.regime);
  if (spec.regime == "ve") {
    spec.family = "exp";
    spec.eta0 = 2.0 * std::log(0.01);
    spec.eta1 = 2.0 * std::log(50.0);
  } else {
    spec.family = dash == std::string::npos ? "sigmoid" : name.substr(dash + 1);
    if (spec.family.rfind("gsig", 0) == 0 && spec.family.size() > 4) {
      std::size_t used = 0;
      std::string tail = spec.family.substr(4);
      try {
        spec.a = std::stod(tail, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tail.size()) throw ConfigError("bad exponent in schedule name '" + name + "'");
      spec.family = "gsig";
    }
    parse_family(spec.family, spec.a);
  }
  return spec;
}

inline ChannelSchedule make_schedule(const ScheduleSpec& spec) {
  return ChannelSchedule(parse_regime(spec.regime), parse_family(spec.family, spec.a), {spec.eta0, spec.eta1});
}

}  // namespace vlb

#endif
