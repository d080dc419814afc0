#include "svdnn/network.hpp"

#include <cmath>
#include <string>

#include "json.hpp"
#include "svdnn/errors.hpp"

namespace svdnn {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::symmetric_sigmoid: return "symmetric_sigmoid";
    case Activation::linear: return "linear";
  }
  return "?";
}

Activation parse_activation(std::string_view name) {
  if (name == "symmetric_sigmoid") return Activation::symmetric_sigmoid;
  if (name == "linear") return Activation::linear;
  throw InvalidInput("unknown activation '" + std::string(name) + "'");
}

MlpParams MlpParams::zeros(const Layout& l, Activation activation) {
  return {Matrix(l.p, l.n), Vector(l.p, 0.0), Matrix(l.m, l.p), Vector(l.m, 0.0), activation};
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double logistic_derivative(double x) {
  const double s = logistic(x);
  return s * (1.0 - s);
}

double activation_eval(Activation kind, double x) {
  if (kind == Activation::linear) return x;
  // 2 / (1 + e^{-2x}) - 1 == tanh(x); tanh avoids the cancellation near 0.
  if (x > 20.0) return 1.0;
  if (x < -20.0) return -1.0;
  return std::tanh(x);
}

double activation_derivative(Activation kind, double x) {
  if (kind == Activation::linear) return 1.0;
  const double f = activation_eval(kind, x);
  return 1.0 - f * f;
}

namespace {

void check_params(const MlpParams& p) {
  const Layout l = p.layout();
  if (p.b_hidden.size() != l.p || p.w_out.cols() != l.p || p.b_out.size() != l.m)
    throw InvalidInput("network parameters have inconsistent shapes");
}

void check_data(const MlpParams& p, const Matrix& x) {
  check_params(p);
  if (x.rows() != p.w_hidden.cols())
    throw InvalidInput("network input has " + std::to_string(x.rows()) + " rows, expected " +
                       std::to_string(p.w_hidden.cols()));
}

void check_targets(const MlpParams& p, const Matrix& x, const Matrix& y) {
  check_data(p, x);
  if (y.rows() != p.w_out.rows() || y.cols() != x.cols())
    throw InvalidInput("network targets must be " + std::to_string(p.w_out.rows()) + "x" +
                       std::to_string(x.cols()));
}

Matrix hidden_activations(const MlpParams& p, const Matrix& x) {
  Matrix h = p.w_hidden * x;
  for (std::size_t k = 0; k < h.rows(); ++k)
    for (double& v : h.row(k)) v = activation_eval(p.activation, v + p.b_hidden[k]);
  return h;
}

Matrix output_from_hidden(const MlpParams& p, const Matrix& h) {
  Matrix out = p.w_out * h;
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (double& v : out.row(i)) v += p.b_out[i];
  return out;
}

}  // namespace

Matrix forward(const MlpParams& params, const Matrix& x) {
  check_data(params, x);
  return output_from_hidden(params, hidden_activations(params, x));
}

double mse_loss(const MlpParams& params, const Matrix& x, const Matrix& y) {
  check_targets(params, x, y);
  const Matrix out = forward(params, x);
  double sum = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double e = out.data()[i] - y.data()[i];
    sum += e * e;
  }
  return out.size() ? sum / static_cast<double>(out.size()) : 0.0;
}

double loss_and_gradient(const MlpParams& params, const Matrix& x, const Matrix& y,
                         std::span<double> grad) {
  check_targets(params, x, y);
  const Layout l = params.layout();
  if (grad.size() != l.param_count())
    throw InvalidInput("gradient buffer has wrong length");
  const std::size_t samples = x.cols();

  const Matrix h = hidden_activations(params, x);
  Matrix err = output_from_hidden(params, h);
  double sum = 0.0;
  for (std::size_t i = 0; i < err.size(); ++i) {
    double& e = err.data()[i];
    e -= y.data()[i];
    sum += e * e;
  }
  const double count = static_cast<double>(l.m * samples);
  if (count == 0.0) {
    std::fill(grad.begin(), grad.end(), 0.0);
    return 0.0;
  }
  const double scale = 2.0 / count;

  auto g_wh = grad.subspan(0, l.p * l.n);
  auto g_bh = grad.subspan(l.p * l.n, l.p);
  auto g_wo = grad.subspan(l.p * l.n + l.p, l.m * l.p);
  auto g_bo = grad.subspan(l.p * l.n + l.p + l.m * l.p, l.m);

  for (std::size_t i = 0; i < l.m; ++i) {
    auto ei = err.row(i);
    for (std::size_t k = 0; k < l.p; ++k) g_wo[i * l.p + k] = scale * dot(ei, h.row(k));
    double s = 0.0;
    for (double e : ei) s += e;
    g_bo[i] = scale * s;
  }

  // Back-propagated signal at the hidden pre-activations.
  Matrix delta(l.p, samples);
  for (std::size_t i = 0; i < l.m; ++i) {
    auto ei = err.row(i);
    for (std::size_t k = 0; k < l.p; ++k) {
      const double w = params.w_out(i, k);
      if (w == 0.0) continue;
      auto dk = delta.row(k);
      for (std::size_t j = 0; j < samples; ++j) dk[j] += w * ei[j];
    }
  }
  for (std::size_t k = 0; k < l.p; ++k) {
    auto dk = delta.row(k);
    auto hk = h.row(k);
    double s = 0.0;
    for (std::size_t j = 0; j < samples; ++j) {
      const double slope =
          params.activation == Activation::linear ? 1.0 : 1.0 - hk[j] * hk[j];
      dk[j] *= scale * slope;
      s += dk[j];
    }
    g_bh[k] = s;
    for (std::size_t c = 0; c < l.n; ++c) g_wh[k * l.n + c] = dot(dk, x.row(c));
  }
  return sum / count;
}

FlatVector loss_gradient(const MlpParams& params, const Matrix& x, const Matrix& y) {
  FlatVector g{Vector(params.layout().param_count()), params.layout()};
  loss_and_gradient(params, x, y, g.values);
  return g;
}

FlatVector flatten(const MlpParams& params) {
  check_params(params);
  FlatVector v{{}, params.layout()};
  v.values.reserve(v.layout.param_count());
  auto append = [&](std::span<const double> s) { v.values.insert(v.values.end(), s.begin(), s.end()); };
  append(params.w_hidden.data());
  append(params.b_hidden);
  append(params.w_out.data());
  append(params.b_out);
  return v;
}

MlpParams unflatten(std::span<const double> values, const Layout& l, Activation activation) {
  if (values.size() != l.param_count())
    throw InvalidInput("flat parameter vector has length " + std::to_string(values.size()) +
                       ", layout needs " + std::to_string(l.param_count()));
  auto take = [&](std::size_t count) {
    std::vector<double> out(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(count));
    values = values.subspan(count);
    return out;
  };
  MlpParams p;
  p.w_hidden = Matrix(l.p, l.n, take(l.p * l.n));
  p.b_hidden = take(l.p);
  p.w_out = Matrix(l.m, l.p, take(l.m * l.p));
  p.b_out = take(l.m);
  p.activation = activation;
  return p;
}

MlpParams unflatten(const FlatVector& v, Activation activation) {
  return unflatten(v.values, v.layout, activation);
}

std::string params_to_json(const MlpParams& params) {
  check_params(params);
  const Layout l = params.layout();
  auto span_to_json = [](std::span<const double> s) { return nlohmann::json(std::vector<double>(s.begin(), s.end())); };
  nlohmann::ordered_json doc;
  doc["n_input"] = l.n;
  doc["p_hidden"] = l.p;
  doc["m_output"] = l.m;
  doc["activation"] = std::string(to_string(params.activation));
  doc["w_hidden"] = span_to_json(params.w_hidden.data());
  doc["b_hidden"] = span_to_json(params.b_hidden);
  doc["w_out"] = span_to_json(params.w_out.data());
  doc["b_out"] = span_to_json(params.b_out);
  return doc.dump(1) + "\n";
}

MlpParams params_from_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("params json: ") + e.what());
  }
  auto field = [&](const char* name) -> const nlohmann::json& {
    if (!doc.contains(name)) throw InvalidInput(std::string("params json: missing field '") + name + "'");
    return doc.at(name);
  };
  try {
    const Layout l{field("n_input").get<std::size_t>(), field("p_hidden").get<std::size_t>(),
                   field("m_output").get<std::size_t>()};
    const Activation act = parse_activation(field("activation").get<std::string>());
    auto arr = [&](const char* name, std::size_t expected) {
      auto v = field(name).get<std::vector<double>>();
      if (v.size() != expected)
        throw InvalidInput(std::string("params json: field '") + name + "' has wrong length");
      return v;
    };
    MlpParams p{Matrix(l.p, l.n, arr("w_hidden", l.p * l.n)), arr("b_hidden", l.p),
                Matrix(l.m, l.p, arr("w_out", l.m * l.p)), arr("b_out", l.m), act};
    require_finite(p.w_hidden, "w_hidden");
    require_finite(p.w_out, "w_out");
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("params json: ") + e.what());
  }
}

}  // namespace svdnn
