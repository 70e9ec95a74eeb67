#include "xalign/encoder.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace xalign {

namespace {

constexpr double kLayerNormEps = 1e-5;
constexpr double kInitStd = 0.02;

Matrix normal_init(int rows, int cols, Rng& rng, double stddev = kInitStd) {
  Matrix m(rows, cols);
  for (double& v : m.data) v = rng.normal(0.0, stddev);
  return m;
}

NodeId layer_norm(Tape& t, NodeId x, NodeId gamma, NodeId beta) {
  NodeId mu = t.row_mean(x);
  NodeId centered = t.sub_colvec(x, mu);
  NodeId var = t.row_mean(t.mul(centered, centered));
  NodeId sd = t.sqrt(t.add_scalar(var, kLayerNormEps));
  NodeId normed = t.div_colvec(centered, sd);
  return t.add_rowvec(t.mul_rowvec(normed, gamma), beta);
}

NodeId linear(Tape& t, NodeId x, const ParamNodes& p, const std::string& prefix) {
  return t.add_rowvec(t.matmul(x, p.at(prefix + ".w")), p.at(prefix + ".b"));
}

void init_block(ParamStore& store, const std::string& prefix, int dim, int hidden, Rng& rng) {
  store.add(prefix + ".ln1.gamma", Matrix(1, dim, 1.0));
  store.add(prefix + ".ln1.beta", Matrix(1, dim, 0.0));
  for (const char* name : {"q", "k", "v", "o"}) {
    store.add(prefix + ".attn.w" + std::string(name), normal_init(dim, dim, rng));
    store.add(prefix + ".attn.b" + std::string(name), Matrix(1, dim, 0.0));
  }
  store.add(prefix + ".ln2.gamma", Matrix(1, dim, 1.0));
  store.add(prefix + ".ln2.beta", Matrix(1, dim, 0.0));
  store.add(prefix + ".mlp.w1", normal_init(dim, hidden, rng));
  store.add(prefix + ".mlp.b1", Matrix(1, hidden, 0.0));
  store.add(prefix + ".mlp.w2", normal_init(hidden, dim, rng));
  store.add(prefix + ".mlp.b2", Matrix(1, dim, 0.0));
}

}  // namespace

void EncoderConfig::validate() const {
  if (dim <= 0 || depth <= 0 || heads <= 0 || decoder_depth <= 0) {
    throw std::invalid_argument("EncoderConfig: sizes must be positive");
  }
  if (dim % heads != 0) throw std::invalid_argument("EncoderConfig: dim not divisible by heads");
  if (mlp_ratio <= 0.0) throw std::invalid_argument("EncoderConfig: mlp_ratio must be positive");
  if (num_patches <= 0 || patch_dim <= 0) {
    throw std::invalid_argument("EncoderConfig: patch geometry must be positive");
  }
  if (vocab_size <= 0 || max_text_len <= 0) {
    throw std::invalid_argument("EncoderConfig: text sizes must be positive");
  }
}

DualEncoder::DualEncoder(EncoderConfig cfg) : cfg_(cfg) { cfg_.validate(); }

void DualEncoder::init_params(ParamStore& store, Rng& rng) const {
  const int d = cfg_.dim;
  store.add("img.patch_embed.w", normal_init(cfg_.patch_dim, d, rng));
  store.add("img.patch_embed.b", Matrix(1, d, 0.0));
  store.add("img.cls", normal_init(1, d, rng));
  store.add("img.pos", normal_init(cfg_.num_patches, d, rng));
  for (int b = 0; b < cfg_.depth; ++b) {
    init_block(store, "img.block" + std::to_string(b), d, cfg_.mlp_hidden(), rng);
  }
  store.add("img.final_ln.gamma", Matrix(1, d, 1.0));
  store.add("img.final_ln.beta", Matrix(1, d, 0.0));

  store.add("txt.tok_embed", normal_init(cfg_.vocab_size, d, rng));
  store.add("txt.cls", normal_init(1, d, rng));
  store.add("txt.pos", normal_init(cfg_.max_text_len, d, rng));
  for (int b = 0; b < cfg_.depth; ++b) {
    init_block(store, "txt.block" + std::to_string(b), d, cfg_.mlp_hidden(), rng);
  }
  store.add("txt.final_ln.gamma", Matrix(1, d, 1.0));
  store.add("txt.final_ln.beta", Matrix(1, d, 0.0));

  store.add("pool.w", normal_init(d, d, rng));
  store.add("pool.b", Matrix(1, d, 0.0));

  store.add("dec.mask_token", normal_init(1, d, rng));
  store.add("dec.pos", normal_init(cfg_.num_patches, d, rng));
  for (int b = 0; b < cfg_.decoder_depth; ++b) {
    init_block(store, "dec.block" + std::to_string(b), d, cfg_.mlp_hidden(), rng);
  }
  store.add("dec.final_ln.gamma", Matrix(1, d, 1.0));
  store.add("dec.final_ln.beta", Matrix(1, d, 0.0));
  store.add("dec.out.w", normal_init(d, cfg_.patch_dim, rng));
  store.add("dec.out.b", Matrix(1, cfg_.patch_dim, 0.0));

  store.add("phi", Matrix(1, cfg_.num_patches, 0.0));
}

NodeId DualEncoder::transformer_stack(Tape& t, const ParamNodes& p, const std::string& prefix,
                                      NodeId x, int depth) const {
  const int dh = cfg_.head_dim();
  const double attn_scale = 1.0 / std::sqrt(static_cast<double>(dh));
  for (int b = 0; b < depth; ++b) {
    const std::string blk = prefix + ".block" + std::to_string(b);
    NodeId h = layer_norm(t, x, p.at(blk + ".ln1.gamma"), p.at(blk + ".ln1.beta"));
    NodeId q = linear(t, h, p, blk + ".attn.wq" == "" ? blk : blk + ".attn.q");
    (void)q;  // placeholder, replaced below
    x = x;
    break;
  }
  return x;
}

FeatureNodes DualEncoder::encode_image(Tape& t, const ParamNodes& p, const Matrix& visible_patches,
                                       const std::vector<int>& positions) const {
  (void)t;
  (void)p;
  (void)visible_patches;
  (void)positions;
  return {};
}

}  // namespace xalign
