#include "biagree/model.hpp"

#include <cmath>
#include <stdexcept>

namespace biagree {

namespace {

constexpr double kMaskLogit = -1e9;

Array glorot(int rows, int cols, Rng& rng) {
  double r = std::sqrt(6.0 / (rows + cols));
  Array a = Array::zeros({rows, cols});
  for (int i = 0; i < a.size(); ++i) a[i] = (2 * uniform01(rng) - 1) * r;
  return a;
}

void add_gru(ParamStore& p, const std::string& prefix, int in_dim, int hid,
             Rng& rng) {
  for (const char* gate : {"z", "r", "h"}) {
    p.add(prefix + ".W" + gate, glorot(hid, in_dim, rng));
    p.add(prefix + ".U" + gate, glorot(hid, hid, rng));
    p.add(prefix + ".b" + gate, Array::zeros({hid}));
  }
}

// z = sigm(Wz e + Uz h + bz); r = sigm(Wr e + Ur h + br)
// hc = tanh(Wh e + Uh (r*h) + bh); h' = (1-z)*hc + z*h
int gru_step(Tape& t, const DirectionalModel& m, const std::string& prefix,
             int input, int h) {
  auto lin = [&](const char* gate, int x) {
    return t.matmul(t.param(m.params, prefix + ".W" + gate), x);
  };
  auto rec = [&](const char* gate, int hh) {
    return t.matmul(t.param(m.params, prefix + ".U" + gate), hh);
  };
  auto bias = [&](const char* gate) {
    return t.param(m.params, prefix + ".b" + gate);
  };
  int z = t.sigmoid_(t.add3(lin("z", input), rec("z", h), bias("z")));
  int r = t.sigmoid_(t.add3(lin("r", input), rec("r", h), bias("r")));
  int hc = t.tanh_(t.add3(lin("h", input), rec("h", t.mul(r, h)), bias("h")));
  return t.add(t.mul(t.one_minus(z), hc), t.mul(z, h));
}

void check_ids(const DirectionalModel& m, const TokenSequence& s,
               const char* what) {
  for (int id : s)
    if (id < 0 || id >= m.config.vocab_size)
      throw std::invalid_argument(std::string("invalid token id in ") + what);
}

}  // namespace

Direction direction_from_name(const std::string& name) {
  if (name == "l2r") return Direction::kL2R;
  if (name == "r2l") return Direction::kR2L;
  throw std::invalid_argument("unknown direction: " + name);
}

DirectionalModel init_model(Direction direction, const ModelConfig& cfg,
                            Rng& rng) {
  if (cfg.vocab_size <= Vocab::kNumReserved)
    throw std::invalid_argument("vocab_size must exceed the reserved ids");
  DirectionalModel m;
  m.direction = direction;
  m.config = cfg;
  ParamStore& p = m.params;
  p.add("src_embed", glorot(cfg.vocab_size, cfg.emb_dim, rng));
  p.add("tgt_embed", glorot(cfg.vocab_size, cfg.emb_dim, rng));
  add_gru(p, "enc", cfg.emb_dim, cfg.hidden_dim, rng);
  p.add("dec_init.W", glorot(cfg.hidden_dim, cfg.hidden_dim, rng));
  p.add("dec_init.b", Array::zeros({cfg.hidden_dim}));
  p.add("attn.Wq", glorot(cfg.attn_dim, cfg.hidden_dim, rng));
  p.add("attn.Wk", glorot(cfg.attn_dim, cfg.hidden_dim, rng));
  add_gru(p, "dec", cfg.emb_dim + cfg.hidden_dim, cfg.hidden_dim, rng);
  p.add("out.W", Array::zeros({cfg.vocab_size, cfg.hidden_dim}));
  p.add("out.b", Array::zeros({cfg.vocab_size}));
  return m;
}

EncoderStates encode(Tape& t, const DirectionalModel& m,
                     const TokenSequence& x) {
  if (x.empty()) throw std::invalid_argument("encode: empty source");
  check_ids(m, x, "source");
  EncoderStates enc;
  int h = t.leaf(Array::zeros({m.config.hidden_dim}));
  int wk = t.param(m.params, "attn.Wk");
  int src_embed = t.param(m.params, "src_embed");
  for (int tok : x) {
    int e = t.embed_row(src_embed, tok);
    h = gru_step(t, m, "enc", e, h);
    enc.ctx.push_back(h);
    enc.keys.push_back(t.matmul(wk, h));
  }
  enc.summary = h;
  return enc;
}

DecoderState initial_decoder_state(Tape& t, const DirectionalModel& m,
                                   const EncoderStates& enc) {
  int h = t.tanh_(t.add(t.matmul(t.param(m.params, "dec_init.W"), enc.summary),
                        t.param(m.params, "dec_init.b")));
  return {h, &enc};
}

StepOut decoder_step(Tape& t, const DirectionalModel& m,
                     const EncoderStates& enc, int prev_token,
                     const DecoderState& state) {
  if (state.enc != &enc)
    throw std::invalid_argument("decoder_step: state does not belong to these "
                                "encoder states");
  if (prev_token < 0 || prev_token >= m.config.vocab_size)
    throw std::invalid_argument("decoder_step: invalid previous token");

  // content-based attention against the precomputed keys
  int q = t.matmul(t.param(m.params, "attn.Wq"), state.h);
  int scores = -1;
  for (int key : enc.keys) {
    int s = t.sum(t.mul(q, key));
    scores = scores < 0 ? s : t.concat(scores, s);
  }
  int alpha = t.softmax(scores);
  int ctx = -1;
  for (size_t i = 0; i < enc.ctx.size(); ++i) {
    int weighted = t.scale(enc.ctx[i], t.pick(alpha, static_cast<int>(i)));
    ctx = ctx < 0 ? weighted : t.add(ctx, weighted);
  }

  int e = t.embed_row(t.param(m.params, "tgt_embed"), prev_token);
  int h = gru_step(t, m, "dec", t.concat(e, ctx), state.h);

  int logits = t.add(t.matmul(t.param(m.params, "out.W"), h),
                     t.param(m.params, "out.b"));
  Array mask = Array::zeros({m.config.vocab_size});
  mask[Vocab::kPad] = kMaskLogit;
  mask[Vocab::kBos] = kMaskLogit;
  int dist = t.softmax(t.add(logits, t.leaf(mask)));
  return {dist, {h, &enc}};
}

int sequence_logprob_node(Tape& t, const DirectionalModel& m,
                          const TokenSequence& x, const TokenSequence& y,
                          bool include_eos) {
  check_ids(m, y, "target");
  TokenSequence ymod = m.direction == Direction::kR2L ? reverse_target(y) : y;
  EncoderStates enc = encode(t, m, x);
  DecoderState state = initial_decoder_state(t, m, enc);
  int prev = Vocab::kBos;
  int total = t.constant(0.0);
  for (int tok : ymod) {
    StepOut out = decoder_step(t, m, enc, prev, state);
    total = t.add(total, t.log_(t.pick(out.dist, tok)));
    state = out.state;
    prev = tok;
  }
  if (include_eos) {
    StepOut out = decoder_step(t, m, enc, prev, state);
    total = t.add(total, t.log_(t.pick(out.dist, Vocab::kEos)));
  }
  return total;
}

double sequence_logprob(const DirectionalModel& m, const TokenSequence& x,
                        const TokenSequence& y, bool include_eos) {
  Tape t;
  return t.value(sequence_logprob_node(t, m, x, y, include_eos)).as_scalar();
}

GradMap sequence_logprob_grad(const DirectionalModel& m,
                              const TokenSequence& x, const TokenSequence& y,
                              bool include_eos, double* value) {
  Tape t;
  int root = sequence_logprob_node(t, m, x, y, include_eos);
  if (value) *value = t.value(root).as_scalar();
  return t.backward(root, m.params);
}

Vec decoder_step_values(const DirectionalModel& m, const TokenSequence& x,
                        const TokenSequence& target_prefix) {
  Tape t;
  EncoderStates enc = encode(t, m, x);
  DecoderState state = initial_decoder_state(t, m, enc);
  int prev = Vocab::kBos;
  StepOut out;
  for (int tok : target_prefix) {
    out = decoder_step(t, m, enc, prev, state);
    state = out.state;
    prev = tok;
  }
  out = decoder_step(t, m, enc, prev, state);
  return t.value(out.dist).vec();
}

}  // namespace biagree
