#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "acpkan/autodiff.hpp"
#include "acpkan/jet.hpp"
#include "acpkan/rng.hpp"

namespace acpkan {

struct TensorInfo {
  std::string name;
  std::vector<std::size_t> shape;
  std::size_t offset = 0;
  std::size_t size = 0;
};

/// Flat storage for every learnable scalar of a model. Tensors are appended in
/// registration order; that order defines GradientVector and checkpoint order.
class ParameterSet {
 public:
  /// Registers a zero-filled tensor and returns its offset.
  std::size_t add(std::string name, std::vector<std::size_t> shape);

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }

  const std::vector<TensorInfo>& tensors() const { return tensors_; }
  const TensorInfo& tensor(std::string_view name) const;
  std::span<double> tensor_values(std::string_view name);
  std::span<const double> tensor_values(std::string_view name) const;

 private:
  std::vector<double> values_;
  std::vector<TensorInfo> tensors_;
};

/// Registers `values` as parameter leaves, in order.
std::vector<Var> bind_parameters(Tape& tape, std::span<const double> values);
/// Registers `values` as constant leaves (no adjoints).
std::vector<Var> bind_constants(Tape& tape, std::span<const double> values);

/// y = W x + b with W stored row major (d_out x d_in).
class LinearLayer {
 public:
  LinearLayer() = default;
  LinearLayer(ParameterSet& params, const std::string& name, int d_in, int d_out);

  std::vector<Jet> forward(std::span<const Var> p, std::span<const Jet> x) const;
  /// Xavier-uniform weights, zero bias.
  void initialize(std::span<double> values, Rng& rng) const;

  int d_in() const { return d_in_; }
  int d_out() const { return d_out_; }
  std::size_t weight_index(int k, int i) const { return weight_ + static_cast<std::size_t>(k * d_in_ + i); }
  std::size_t bias_index(int k) const { return bias_ + static_cast<std::size_t>(k); }

 private:
  int d_in_ = 0;
  int d_out_ = 0;
  std::size_t weight_ = 0;
  std::size_t bias_ = 0;
};

/// Normalization over the feature dimension with learnable gain and shift.
class LayerNormLayer {
 public:
  LayerNormLayer() = default;
  LayerNormLayer(ParameterSet& params, const std::string& name, int dim, double eps = 1e-5);

  std::vector<Jet> forward(std::span<const Var> p, std::span<const Jet> x) const;
  void initialize(std::span<double> values) const;

  int dim() const { return dim_; }
  double eps() const { return eps_; }
  std::size_t gamma_index(int i) const { return gamma_ + static_cast<std::size_t>(i); }
  std::size_t beta_index(int i) const { return beta_ + static_cast<std::size_t>(i); }

 private:
  int dim_ = 0;
  double eps_ = 1e-5;
  std::size_t gamma_ = 0;
  std::size_t beta_ = 0;
};

/// w1 sin(x) + w2 cos(x), element-wise, with two shared learnable scalars.
class WaveletAct {
 public:
  WaveletAct() = default;
  WaveletAct(ParameterSet& params, const std::string& name);

  std::vector<Jet> forward(std::span<const Var> p, std::span<const Jet> x) const;
  void initialize(std::span<double> values) const;

  std::size_t w1_index() const { return offset_; }
  std::size_t w2_index() const { return offset_ + 1; }

 private:
  std::size_t offset_ = 0;
};

/// T_0..T_N of a jet by the three-term recurrence T_n = 2 z T_{n-1} - T_{n-2}.
std::vector<Jet> cheby_basis(const Jet& z, int degree);

/// First-kind Chebyshev KAN layer:
///   y_k = sum_i sum_n C[i][k][n] T_n(tanh(x_i)).
/// Coefficients are stored with shape d_in x d_out x (degree + 1).
class Cheby1KanLayer {
 public:
  Cheby1KanLayer() = default;
  Cheby1KanLayer(ParameterSet& params, const std::string& name, int d_in, int d_out, int degree);

  /// Contracts coefficients against T_n, T_n' and T_n'' of the scalar
  /// tanh(x_i) before applying the chain rule once per (k, i) pair.
  std::vector<Jet> forward(std::span<const Var> p, std::span<const Jet> x) const;
  /// Straightforward jet arithmetic over cheby_basis(); kept as the reference
  /// the fused forward is tested against.
  std::vector<Jet> forward_reference(std::span<const Var> p, std::span<const Jet> x) const;

  /// Normal(0, 1 / (d_in sqrt(N + 1))) coefficients.
  void initialize(std::span<double> values, Rng& rng) const;
  void initialize_normal(std::span<double> values, Rng& rng, double stddev) const;

  int d_in() const { return d_in_; }
  int d_out() const { return d_out_; }
  int degree() const { return degree_; }
  std::size_t coeff_index(int i, int k, int n) const {
    return offset_ + static_cast<std::size_t>((i * d_out_ + k) * (degree_ + 1) + n);
  }
  std::size_t coeff_count() const { return static_cast<std::size_t>(d_in_ * d_out_ * (degree_ + 1)); }

 private:
  int d_in_ = 0;
  int d_out_ = 0;
  int degree_ = 0;
  std::size_t offset_ = 0;
};

/// Common interface of the trainable networks. Parameters live in the
/// network; forward() reads them through leaves bound on the caller's tape.
class Network {
 public:
  virtual ~Network() = default;

  virtual std::string kind() const = 0;
  virtual int input_dim() const = 0;
  virtual int output_dim() const = 0;
  virtual std::vector<Jet> forward(Tape& tape, std::span<const Var> params, std::span<const double> x,
                                   int order) const = 0;
  virtual void initialize(Rng& rng) = 0;
  virtual std::unique_ptr<Network> clone() const = 0;

  ParameterSet& parameters() { return params_; }
  const ParameterSet& parameters() const { return params_; }
  std::size_t parameter_count() const { return params_.size(); }

 protected:
  ParameterSet params_;
};

struct AcPkanConfig {
  int d_in = 2;
  int d_model = 16;
  int d_hidden = 32;
  int d_out = 1;
  int layers = 2;
  int degree = 8;

  /// 2 -> 16 -> 32, two Chebyshev blocks of degree 8, scalar output.
  static AcPkanConfig desk() { return {}; }
  /// About 5k parameters; used where training time is budgeted tightly.
  static AcPkanConfig small() { return {2, 16, 16, 1, 2, 8}; }
  /// The 751-parameter model of the 1D function-fitting task.
  static AcPkanConfig fit() { return {1, 4, 6, 1, 2, 8}; }

  void validate() const;
  /// Closed-form parameter count.
  std::size_t parameter_count() const;
};

/// Chebyshev KAN blocks with wavelet encoders and the U/V attention update
///   alpha_0 = H + alpha,  alpha = (1 - alpha_0) U + alpha_0 (V + 1).
class AcPkanModel final : public Network {
 public:
  explicit AcPkanModel(const AcPkanConfig& config);

  std::string kind() const override { return "acpkan"; }
  int input_dim() const override { return config_.d_in; }
  int output_dim() const override { return config_.d_out; }
  std::vector<Jet> forward(Tape& tape, std::span<const Var> params, std::span<const double> x,
                           int order) const override;
  void initialize(Rng& rng) override;
  std::unique_ptr<Network> clone() const override { return std::make_unique<AcPkanModel>(*this); }

  const AcPkanConfig& config() const { return config_; }
  const LinearLayer& embedding() const { return embed_; }
  const LinearLayer& encoder_u() const { return enc_u_; }
  const LinearLayer& encoder_v() const { return enc_v_; }
  const WaveletAct& wavelet_u() const { return wav_u_; }
  const WaveletAct& wavelet_v() const { return wav_v_; }
  const std::vector<Cheby1KanLayer>& cheby_layers() const { return cheby_; }
  const std::vector<LayerNormLayer>& norms() const { return norms_; }
  const LinearLayer& output_layer() const { return out_; }

  /// U and V for an already embedded input; exposed for tests.
  std::pair<std::vector<Jet>, std::vector<Jet>> encode(std::span<const Var> p, std::span<const Jet> h0) const;

 private:
  AcPkanConfig config_;
  LinearLayer embed_;
  LinearLayer enc_u_;
  LinearLayer enc_v_;
  WaveletAct wav_u_;
  WaveletAct wav_v_;
  std::vector<Cheby1KanLayer> cheby_;
  std::vector<LayerNormLayer> norms_;
  LinearLayer out_;
};

/// Fully connected tanh network; `sizes` lists every layer width including
/// input and output.
class MlpPinn final : public Network {
 public:
  explicit MlpPinn(std::vector<int> sizes);

  std::string kind() const override { return "mlp"; }
  int input_dim() const override { return sizes_.front(); }
  int output_dim() const override { return sizes_.back(); }
  std::vector<Jet> forward(Tape& tape, std::span<const Var> params, std::span<const double> x,
                           int order) const override;
  void initialize(Rng& rng) override;
  std::unique_ptr<Network> clone() const override { return std::make_unique<MlpPinn>(*this); }

  const std::vector<int>& sizes() const { return sizes_; }
  const std::vector<LinearLayer>& layers() const { return layers_; }

  /// 2 -> 48 -> 48 -> 48 -> 1, about 5k parameters.
  static std::vector<int> small_sizes(int d_in = 2) { return {d_in, 48, 48, 48, 1}; }

 private:
  std::vector<int> sizes_;
  std::vector<LinearLayer> layers_;
};

inline void init_model(Network& model, Rng& rng) { model.initialize(rng); }

/// Seeds the inputs of a d-dimensional point as jets of the given order.
std::vector<Jet> seed_inputs(Tape& tape, std::span<const double> x, int order);

/// Plain forward evaluation of the outputs at one point.
std::vector<double> predict(const Network& model, std::span<const double> x);

}  // namespace acpkan
