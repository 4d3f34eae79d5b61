#include "rshe/noise.hpp"

#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace rshe {

void NoiseSpec::validate() const {
  if (!(lambda_exponent > 0.5) || !std::isfinite(lambda_exponent)) {
    throw std::invalid_argument("NoiseSpec: lambda exponent must be > 1/2");
  }
  if (N < 1) throw std::invalid_argument("NoiseSpec: N must be >= 1");
  if (!(multiplier >= 0.0) || !std::isfinite(multiplier)) {
    throw std::invalid_argument("NoiseSpec: multiplier must be finite and >= 0");
  }
}

std::vector<double> spectrum(const NoiseSpec& spec) {
  spec.validate();
  std::vector<double> lam(spec.N + 1);
  lam[0] = spec.multiplier;
  for (std::size_t m = 1; m <= spec.N; ++m) {
    lam[m] = spec.multiplier * std::pow(static_cast<double>(m), -spec.lambda_exponent);
  }
  return lam;
}

double spectrum_tail_bound(double lambda_exponent, std::size_t N) {
  const double p = 2.0 * lambda_exponent;
  return std::pow(static_cast<double>(N), 1.0 - p) / (p - 1.0);
}

PathRng::PathRng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x52534845u};
  engine_.seed(seq);
}

ModeMoments mode_moments(std::size_t k, double h) {
  if (k == 0) return {h, h, h};
  const double a = laplacian_rate(k);
  return {h, -std::expm1(-2.0 * a * h) / (2.0 * a), -std::expm1(-a * h) / a};
}

StepDraw sample_step(const NoiseSpec& spec, double h, PathRng& rng, SamplingDiagnostics* diag) {
  if (!(h > 0.0)) throw std::invalid_argument("sample_step: h must be > 0");
  const std::size_t N = spec.N;
  StepDraw d{std::vector<double>(N + 1), std::vector<double>(N + 1)};
  const double sh = std::sqrt(h);
  for (std::size_t k = 0; k <= N; ++k) {
    const double z1 = rng.normal();
    const double z2 = rng.normal();
    d.dbeta[k] = sh * z1;
    if (k == 0) {
      d.conv[k] = d.dbeta[k];
      continue;
    }
    const auto mm = mode_moments(k, h);
    // Residual variance var_conv - cov^2/h suffers cancellation when a h is small.
    const long double vc = mm.var_conv;
    const long double cv = mm.cov;
    long double resid = vc - cv * cv / static_cast<long double>(h);
    double slope = mm.cov / sh;
    if (resid < 0.0L) {
      if (diag) ++diag->clamped_modes;
      resid = 0.0L;
      slope = std::sqrt(mm.var_conv);  // correlation clamped to 1
    }
    d.conv[k] = slope * z1 + static_cast<double>(std::sqrt(resid)) * z2;
  }
  return d;
}

namespace {

// Conditional sample of x = (B1, I1) given z = (dbeta, conv) for one mode.
std::pair<double, double> bridge_mode(std::size_t k, double h, double tau, double dbeta, double conv,
                                      PathRng& rng) {
  const double z1 = rng.normal();
  const double z2 = rng.normal();
  if (k == 0) {
    const double mean = tau / h * dbeta;
    const double sd = std::sqrt(tau * (h - tau) / h);
    const double b1 = mean + sd * z1;
    return {b1, b1};
  }
  using ld = long double;
  const ld a = laplacian_rate(k);
  const ld e = std::exp(-a * (h - tau));
  const ld ct = -std::expm1(-a * tau) / a;
  const ld vt = -std::expm1(-2.0L * a * tau) / (2.0L * a);
  const ld ch = -std::expm1(-a * h) / a;
  const ld vh = -std::expm1(-2.0L * a * h) / (2.0L * a);
  const ld szz[2][2] = {{h, ch}, {ch, vh}};
  const ld det = szz[0][0] * szz[1][1] - szz[0][1] * szz[0][1];
  if (!(det > 1e-14L * szz[0][0] * szz[1][1])) {
    // Degenerate (a h tiny): the OU integral is the Brownian increment.
    const double mean = tau / h * dbeta;
    const double b1 = mean + std::sqrt(tau * (h - tau) / h) * z1;
    return {b1, b1};
  }
  const ld inv[2][2] = {{szz[1][1] / det, -szz[0][1] / det}, {-szz[0][1] / det, szz[0][0] / det}};
  const ld sxz[2][2] = {{tau, e * ct}, {ct, e * vt}};
  const ld sxx[2][2] = {{tau, ct}, {ct, vt}};
  // K = sxz * inv
  ld K[2][2];
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) K[i][j] = sxz[i][0] * inv[0][j] + sxz[i][1] * inv[1][j];
  const ld mean0 = K[0][0] * dbeta + K[0][1] * conv;
  const ld mean1 = K[1][0] * dbeta + K[1][1] * conv;
  // cond = sxx - K sxz^T
  ld c00 = sxx[0][0] - (K[0][0] * sxz[0][0] + K[0][1] * sxz[0][1]);
  ld c01 = sxx[0][1] - (K[0][0] * sxz[1][0] + K[0][1] * sxz[1][1]);
  ld c11 = sxx[1][1] - (K[1][0] * sxz[1][0] + K[1][1] * sxz[1][1]);
  if (c00 < 0.0L) c00 = 0.0L;
  if (c11 < 0.0L) c11 = 0.0L;
  const ld l00 = std::sqrt(c00);
  const ld l10 = l00 > 0.0L ? c01 / l00 : 0.0L;
  ld r = c11 - l10 * l10;
  if (r < 0.0L) r = 0.0L;
  const ld l11 = std::sqrt(r);
  return {static_cast<double>(mean0 + l00 * z1), static_cast<double>(mean1 + l10 * z1 + l11 * z2)};
}

}  // namespace

std::pair<StepDraw, StepDraw> split_step(const StepDraw& draw, double h, double tau, PathRng& rng) {
  if (!(tau > 0.0 && tau < h)) throw std::invalid_argument("split_step: need 0 < tau < h");
  const std::size_t n = draw.dbeta.size();
  StepDraw first{std::vector<double>(n), std::vector<double>(n)};
  StepDraw second{std::vector<double>(n), std::vector<double>(n)};
  for (std::size_t k = 0; k < n; ++k) {
    const auto [b1, i1] = bridge_mode(k, h, tau, draw.dbeta[k], draw.conv[k], rng);
    first.dbeta[k] = b1;
    first.conv[k] = i1;
    second.dbeta[k] = draw.dbeta[k] - b1;
    const double e = k == 0 ? 1.0 : std::exp(-laplacian_rate(k) * (h - tau));
    second.conv[k] = k == 0 ? second.dbeta[k] : draw.conv[k] - e * i1;
  }
  return {std::move(first), std::move(second)};
}

StepDraw compose_steps(const StepDraw& first, const StepDraw& second, double h2) {
  const std::size_t n = first.dbeta.size();
  if (second.dbeta.size() != n) throw std::invalid_argument("compose_steps: mode count mismatch");
  StepDraw out{std::vector<double>(n), std::vector<double>(n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.dbeta[k] = first.dbeta[k] + second.dbeta[k];
    out.conv[k] = std::exp(-laplacian_rate(k) * h2) * first.conv[k] + second.conv[k];
  }
  return out;
}

SpectralField convolution_field(const StepDraw& draw, const NoiseSpec& spec) {
  const auto lam = spectrum(spec);
  if (draw.conv.size() != lam.size()) throw std::invalid_argument("convolution_field: mode count mismatch");
  std::vector<double> c(lam.size());
  for (std::size_t k = 0; k < lam.size(); ++k) c[k] = lam[k] * draw.conv[k];
  return SpectralField(std::move(c));
}

NoiseLedger make_ledger(const NoiseSpec& spec, double h, std::size_t n_steps, std::uint64_t stream) {
  spec.validate();
  if (!(h > 0.0)) throw std::invalid_argument("make_ledger: h must be > 0");
  NoiseLedger ledger{spec, h, stream, {}};
  ledger.draws.reserve(n_steps);
  PathRng rng(spec.seed, stream);
  for (std::size_t n = 0; n < n_steps; ++n) ledger.draws.push_back(sample_step(spec, h, rng));
  return ledger;
}

std::string ledger_to_json(const NoiseLedger& ledger) {
  using nlohmann::json;
  const std::size_t modes = ledger.spec.N + 1;
  json dbeta = json::array();
  json conv = json::array();
  for (std::size_t k = 0; k < modes; ++k) {
    json db = json::array();
    json cv = json::array();
    for (const auto& d : ledger.draws) {
      db.push_back(d.dbeta[k]);
      cv.push_back(d.conv[k]);
    }
    dbeta.push_back(std::move(db));
    conv.push_back(std::move(cv));
  }
  json j = {{"spec",
             {{"lambda_exponent", ledger.spec.lambda_exponent},
              {"N", ledger.spec.N},
              {"seed", ledger.spec.seed},
              {"multiplier", ledger.spec.multiplier}}},
            {"h", ledger.h},
            {"stream", ledger.stream},
            {"n_steps", ledger.draws.size()},
            {"layout", "mode-major"},
            {"dbeta", std::move(dbeta)},
            {"conv", std::move(conv)}};
  return j.dump();
}

NoiseLedger ledger_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  NoiseLedger ledger;
  const auto& s = j.at("spec");
  ledger.spec.lambda_exponent = s.at("lambda_exponent").get<double>();
  ledger.spec.N = s.at("N").get<std::size_t>();
  ledger.spec.seed = s.at("seed").get<std::uint64_t>();
  ledger.spec.multiplier = s.at("multiplier").get<double>();
  ledger.spec.validate();
  ledger.h = j.at("h").get<double>();
  ledger.stream = j.at("stream").get<std::uint64_t>();
  const auto n_steps = j.at("n_steps").get<std::size_t>();
  const auto& dbeta = j.at("dbeta");
  const auto& conv = j.at("conv");
  const std::size_t modes = ledger.spec.N + 1;
  if (dbeta.size() != modes || conv.size() != modes) {
    throw std::invalid_argument("ledger_from_json: mode count mismatch");
  }
  ledger.draws.assign(n_steps, StepDraw{std::vector<double>(modes), std::vector<double>(modes)});
  for (std::size_t k = 0; k < modes; ++k) {
    if (dbeta[k].size() != n_steps || conv[k].size() != n_steps) {
      throw std::invalid_argument("ledger_from_json: step count mismatch");
    }
    for (std::size_t n = 0; n < n_steps; ++n) {
      ledger.draws[n].dbeta[k] = dbeta[k][n].get<double>();
      ledger.draws[n].conv[k] = conv[k][n].get<double>();
    }
  }
  return ledger;
}

}  // namespace rshe
