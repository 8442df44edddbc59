#include "sslus/losses.hpp"

#include <cmath>
#include <iomanip>
#include <stdexcept>

#include "sslus/errors.hpp"

namespace sslus {

RelationNetworkImpl::RelationNetworkImpl(std::int64_t input, std::int64_t hidden) {
  layer1 = register_module("layer1", torch::nn::Linear(input, hidden));
  layer2 = register_module("layer2", torch::nn::Linear(hidden, 1));
}

torch::Tensor RelationNetworkImpl::forward(const torch::Tensor& a, const torch::Tensor& b) {
  if (a.size(-1) != layer1->options.in_features() || b.size(-1) != a.size(-1)) {
    throw std::invalid_argument("relation network input dimension mismatch");
  }
  auto z = a * b;
  return torch::sigmoid(layer2->forward(torch::relu(layer1->forward(z)))).squeeze(-1);
}

double relation_score(RelationNetworkImpl& net, const torch::Tensor& a, const torch::Tensor& b) {
  torch::NoGradGuard no_grad;
  return net.forward(a, b).item<double>();
}

namespace {

void check_unit_interval(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw std::invalid_argument(std::string(what) + " must lie in [0,1]");
  }
}

torch::Tensor as_tensor(const std::vector<double>& v) {
  return torch::tensor(v, torch::kFloat64);
}

torch::Tensor as_tensor(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return torch::empty({0, 0}, torch::kFloat64);
  std::vector<torch::Tensor> ts;
  for (const auto& r : rows) ts.push_back(as_tensor(r));
  return torch::stack(ts);
}

}  // namespace

torch::Tensor rcl_loss(const torch::Tensor& pos, const torch::Tensor& neg) {
  if (pos.numel() == 0 || pos.dim() != 1) throw std::invalid_argument("rcl_loss: empty batch");
  if (neg.dim() != 2 || neg.size(0) != pos.size(0) || neg.size(1) < 1) {
    throw std::invalid_argument("rcl_loss: need [N,k>=1] negative scores");
  }
  auto positive_term = (pos - 1.0).pow(2);
  auto negative_term = neg.pow(2).mean(1);
  return (positive_term + negative_term).mean();
}

double rcl_loss(const std::vector<double>& pos, const std::vector<std::vector<double>>& neg) {
  if (pos.empty() || neg.size() != pos.size()) throw std::invalid_argument("rcl_loss: empty batch");
  return rcl_loss(as_tensor(pos), as_tensor(neg)).item<double>();
}

torch::Tensor total_rcl(const torch::Tensor& image, const torch::Tensor& patch, double w) {
  check_unit_interval(w, "w");
  return w * image + (1.0 - w) * patch;
}

double total_rcl(double image, double patch, double w) {
  check_unit_interval(w, "w");
  return w * image + (1.0 - w) * patch;
}

torch::Tensor nce_loss(const torch::Tensor& anchor, const torch::Tensor& positive,
                       const torch::Tensor& negatives, double temperature) {
  if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be positive");
  if (negatives.dim() != 3 || negatives.size(1) == 0) {
    throw std::invalid_argument("nce_loss: need at least one negative");
  }
  if (anchor.sizes() != positive.sizes() || negatives.size(0) != anchor.size(0) ||
      negatives.size(2) != anchor.size(1)) {
    throw std::invalid_argument("nce_loss: shape mismatch");
  }
  auto pos_logit = (anchor * positive).sum(-1, true) / temperature;                 // [N,1]
  auto neg_logit = (negatives * anchor.unsqueeze(1)).sum(-1) / temperature;         // [N,k]
  auto logits = torch::cat({pos_logit, neg_logit}, 1);
  return -torch::log_softmax(logits, 1).select(1, 0).mean();
}

double nce_loss(const std::vector<double>& anchor, const std::vector<double>& positive,
                const std::vector<std::vector<double>>& negatives, double temperature) {
  if (negatives.empty()) throw std::invalid_argument("nce_loss: need at least one negative");
  return nce_loss(as_tensor(anchor).unsqueeze(0), as_tensor(positive).unsqueeze(0),
                  as_tensor(negatives).unsqueeze(0), temperature)
      .item<double>();
}

torch::Tensor perceptual_loss(const torch::Tensor& image_tap, const torch::Tensor& patch_taps) {
  if (patch_taps.dim() != 3 || image_tap.dim() != 2 || patch_taps.size(0) != image_tap.size(0) ||
      patch_taps.size(2) != image_tap.size(1)) {
    throw std::invalid_argument("perceptual_loss: tap feature length mismatch");
  }
  return (image_tap.unsqueeze(1) - patch_taps).pow(2).mean();
}

double perceptual_loss(const std::vector<double>& image_tap,
                       const std::vector<std::vector<double>>& patch_taps) {
  for (const auto& p : patch_taps) {
    if (p.size() != image_tap.size()) {
      throw std::invalid_argument("perceptual_loss: tap feature length mismatch");
    }
  }
  if (patch_taps.empty()) throw std::invalid_argument("perceptual_loss: no patch taps");
  return perceptual_loss(as_tensor(image_tap).unsqueeze(0), as_tensor(patch_taps).unsqueeze(0))
      .item<double>();
}

torch::Tensor combined_loss(const torch::Tensor& contrastive, const torch::Tensor& perceptual,
                            double lambda) {
  check_unit_interval(lambda, "lambda");
  return lambda * contrastive + (1.0 - lambda) * perceptual;
}

double combined_loss(double contrastive, double perceptual, double lambda) {
  check_unit_interval(lambda, "lambda");
  return lambda * contrastive + (1.0 - lambda) * perceptual;
}

std::string to_string(Method m) {
  switch (m) {
    case Method::Pirl: return "pirl";
    case Method::PirlPercep: return "pirl_percep";
    case Method::Rcl: return "rcl";
    case Method::RclPercep: return "rcl_percep";
  }
  return "rcl_percep";
}

Method parse_method(const std::string& s) {
  if (s == "pirl") return Method::Pirl;
  if (s == "pirl_percep") return Method::PirlPercep;
  if (s == "rcl") return Method::Rcl;
  if (s == "rcl_percep") return Method::RclPercep;
  throw ConfigError("unknown method '" + s + "'");
}

bool uses_rcl(Method m) { return m == Method::Rcl || m == Method::RclPercep; }
bool uses_perceptual(Method m) { return m == Method::RclPercep || m == Method::PirlPercep; }

double default_lambda(Method m) {
  switch (m) {
    case Method::RclPercep: return 0.1;
    case Method::PirlPercep: return 0.75;
    default: return 1.0;
  }
}

const char* LossReport::csv_header() {
  return "epoch,step,rcl_image,rcl_patch,rcl_total,perceptual,nce_total,combined";
}

void LossReport::write_csv(std::ostream& os) const {
  auto field = [&os](const std::optional<double>& v) {
    os << ',';
    if (v) os << *v;
  };
  const auto flags = os.flags();
  const auto prec = os.precision();
  os << std::setprecision(17) << epoch << ',' << step;
  field(rcl_image);
  field(rcl_patch);
  field(rcl_total);
  field(perceptual);
  field(nce_total);
  os << ',' << combined << '\n';
  os.flags(flags);
  os.precision(prec);
}

}  // namespace sslus
