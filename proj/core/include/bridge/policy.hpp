#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bridge/adam.hpp"
#include "bridge/rng.hpp"
#include "bridge/tape.hpp"
#include "bridge/tensor.hpp"
#include "bridge/tokens.hpp"

namespace bridge {

struct PolicyConfig {
    int vocab_size = tok::kVocabSize;
    int model_dim = 32;
    int n_layers = 1;
    int n_heads = 2;
    int context_length = 128;
    double init_std = 0.08;
    std::uint64_t seed = 0;
    double temperature = 1.0;  // sampling default; the GRPO runs keep it at 1

    void validate() const {
        if (vocab_size <= 0 || model_dim <= 0 || n_layers <= 0 || n_heads <= 0 ||
            context_length <= 0)
            throw ConfigError("policy sizes must be positive");
        if (model_dim % n_heads != 0)
            throw ConfigError("model_dim " + std::to_string(model_dim) +
                              " not divisible by n_heads " + std::to_string(n_heads));
        if (init_std < 0) throw ConfigError("init_std must be nonnegative");
    }

    int head_dim() const { return model_dim / n_heads; }
};

enum class PolicyRole { Current, OldSnapshot, FrozenBase };

inline const char* role_name(PolicyRole r) {
    switch (r) {
        case PolicyRole::Current: return "current";
        case PolicyRole::OldSnapshot: return "old_snapshot";
        case PolicyRole::FrozenBase: return "frozen_base";
    }
    return "current";
}

// Pre-norm decoder-only transformer with learned positional embeddings and an
// output head tied to the token embeddings. Value semantics throughout:
// snapshot/freeze are plain copies with a different role tag.
template <typename S>
struct Policy {
    PolicyConfig config;
    PolicyRole role = PolicyRole::Current;

    Tensor<S> tok_emb;  // [V x d], also the output head
    Tensor<S> pos_emb;  // [T x d]

    struct Layer {
        std::vector<Tensor<S>> wq, wk, wv;  // per head, [d x dh]
        std::vector<Tensor<S>> wo;          // per head, [dh x d]
        Tensor<S> attn_gain;                // [d]
        Tensor<S> mlp_gain;                 // [d]
        Tensor<S> w1;                       // [d x 4d]
        Tensor<S> b1;                       // [4d]
        Tensor<S> w2;                       // [4d x d]
        Tensor<S> b2;                       // [d]
    };
    std::vector<Layer> layers;
    Tensor<S> final_gain;  // [d]

    std::vector<Tensor<S>*> parameters() {
        std::vector<Tensor<S>*> out;
        for (auto& [name, t] : named_parameters()) {
            (void)name;
            out.push_back(t);
        }
        return out;
    }

    std::vector<std::pair<std::string, Tensor<S>*>> named_parameters() {
        std::vector<std::pair<std::string, Tensor<S>*>> out;
        out.emplace_back("tok_emb", &tok_emb);
        out.emplace_back("pos_emb", &pos_emb);
        for (std::size_t l = 0; l < layers.size(); ++l) {
            const std::string p = "layer" + std::to_string(l) + ".";
            Layer& L = layers[l];
            for (std::size_t h = 0; h < L.wq.size(); ++h) {
                const std::string hp = p + "head" + std::to_string(h) + ".";
                out.emplace_back(hp + "wq", &L.wq[h]);
                out.emplace_back(hp + "wk", &L.wk[h]);
                out.emplace_back(hp + "wv", &L.wv[h]);
                out.emplace_back(hp + "wo", &L.wo[h]);
            }
            out.emplace_back(p + "attn_gain", &L.attn_gain);
            out.emplace_back(p + "mlp_gain", &L.mlp_gain);
            out.emplace_back(p + "w1", &L.w1);
            out.emplace_back(p + "b1", &L.b1);
            out.emplace_back(p + "w2", &L.w2);
            out.emplace_back(p + "b2", &L.b2);
        }
        out.emplace_back("final_gain", &final_gain);
        return out;
    }
};

// All parameters drawn Normal(0, init_std) in a fixed order, so a seed pins
// the model bitwise.
template <typename S>
Policy<S> init_policy(const PolicyConfig& config) {
    config.validate();
    Policy<S> p;
    p.config = config;
    Rng rng(config.seed);
    auto normal = [&](std::vector<std::size_t> shape) {
        Tensor<S> t(std::move(shape));
        for (auto& v : t.values)
            v = static_cast<S>(rng.next_normal() * config.init_std);
        return t;
    };
    const auto V = static_cast<std::size_t>(config.vocab_size);
    const auto d = static_cast<std::size_t>(config.model_dim);
    const auto dh = static_cast<std::size_t>(config.head_dim());
    const auto T = static_cast<std::size_t>(config.context_length);
    p.tok_emb = normal({V, d});
    p.pos_emb = normal({T, d});
    p.layers.resize(static_cast<std::size_t>(config.n_layers));
    for (auto& L : p.layers) {
        for (int h = 0; h < config.n_heads; ++h) {
            L.wq.push_back(normal({d, dh}));
            L.wk.push_back(normal({d, dh}));
            L.wv.push_back(normal({d, dh}));
            L.wo.push_back(normal({dh, d}));
        }
        L.attn_gain = normal({d});
        L.mlp_gain = normal({d});
        L.w1 = normal({d, 4 * d});
        L.b1 = normal({4 * d});
        L.w2 = normal({4 * d, d});
        L.b2 = normal({d});
    }
    p.final_gain = normal({d});
    return p;
}

template <typename S>
Policy<S> snapshot(const Policy<S>& p) {
    Policy<S> copy = p;
    copy.role = PolicyRole::OldSnapshot;
    return copy;
}

template <typename S>
Policy<S> freeze(const Policy<S>& p) {
    Policy<S> copy = p;
    copy.role = PolicyRole::FrozenBase;
    return copy;
}

// Binds one policy's parameters to one tape as (optionally grad-enabled)
// leaves, then builds forward graphs over those shared leaves. Several
// forward calls on the same graph accumulate gradients into the same leaves.
template <typename S>
class PolicyGraph {
public:
    using Ref = typename Tape<S>::Ref;

    PolicyGraph(Tape<S>& tape, Policy<S>& policy, bool trainable)
        : tape_(&tape), policy_(&policy), trainable_(trainable) {
        for (auto* t : policy.parameters())
            param_refs_.push_back(tape.leaf(*t, trainable));
    }

    // Logits [len x V]; row t conditions on tokens 0..t only.
    Ref forward(const std::vector<int>& tokens) {
        const auto& cfg = policy_->config;
        const auto len = tokens.size();
        if (len == 0) throw ContractError("forward on empty token sequence");
        if (len > static_cast<std::size_t>(cfg.context_length))
            throw ContractError("sequence length " + std::to_string(len) +
                                " exceeds context length " +
                                std::to_string(cfg.context_length));
        for (int id : tokens)
            if (id < 0 || id >= cfg.vocab_size)
                throw IndexError("token id " + std::to_string(id) + " outside vocabulary");

        Tape<S>& t = *tape_;
        std::size_t next = 0;
        const Ref tok_emb = param_refs_[next++];
        const Ref pos_emb = param_refs_[next++];

        std::vector<int> positions(len);
        for (std::size_t i = 0; i < len; ++i) positions[i] = static_cast<int>(i);
        Ref h = t.add(t.gather_rows(tok_emb, tokens), t.gather_rows(pos_emb, positions));

        const Ref mask = t.constant(causal_mask(len));
        const S scale = static_cast<S>(1.0 / std::sqrt(static_cast<double>(cfg.head_dim())));

        for (int l = 0; l < cfg.n_layers; ++l) {
            std::vector<Ref> wq(cfg.n_heads), wk(cfg.n_heads), wv(cfg.n_heads), wo(cfg.n_heads);
            for (int hd = 0; hd < cfg.n_heads; ++hd) {
                wq[hd] = param_refs_[next++];
                wk[hd] = param_refs_[next++];
                wv[hd] = param_refs_[next++];
                wo[hd] = param_refs_[next++];
            }
            const Ref attn_gain = param_refs_[next++];
            const Ref mlp_gain = param_refs_[next++];
            const Ref w1 = param_refs_[next++];
            const Ref b1 = param_refs_[next++];
            const Ref w2 = param_refs_[next++];
            const Ref b2 = param_refs_[next++];

            const Ref a_in = t.rmsnorm(h, attn_gain);
            Ref attn_out = -1;
            for (int hd = 0; hd < cfg.n_heads; ++hd) {
                const Ref q = t.matmul(a_in, wq[hd]);
                const Ref k = t.matmul(a_in, wk[hd]);
                const Ref v = t.matmul(a_in, wv[hd]);
                const Ref scores = t.add(t.scale(t.matmul(q, t.transpose(k)), scale), mask);
                const Ref att = t.softmax_rows(scores);
                const Ref proj = t.matmul(t.matmul(att, v), wo[hd]);
                attn_out = hd == 0 ? proj : t.add(attn_out, proj);
            }
            h = t.add(h, attn_out);

            const Ref m_in = t.rmsnorm(h, mlp_gain);
            const Ref hidden = t.gelu(t.add_rowvec(t.matmul(m_in, w1), b1));
            const Ref mlp = t.add_rowvec(t.matmul(hidden, w2), b2);
            h = t.add(h, mlp);
        }

        const Ref final_gain = param_refs_[next++];
        const Ref norm = t.rmsnorm(h, final_gain);
        return t.matmul(norm, t.transpose(tok_emb));  // tied head
    }

    const std::vector<Ref>& param_refs() const { return param_refs_; }
    bool trainable() const { return trainable_; }

    bool fits(std::size_t len) const {
        return len <= static_cast<std::size_t>(policy_->config.context_length);
    }

private:
    Tape<S>* tape_;
    Policy<S>* policy_;
    std::vector<Ref> param_refs_;
    bool trainable_;

    static Tensor<S> causal_mask(std::size_t len) {
        Tensor<S> m({len, len});
        for (std::size_t i = 0; i < len; ++i)
            for (std::size_t j = i + 1; j < len; ++j) m.at(i, j) = S(-1e9);
        return m;
    }
};

// Per-position next-token log-probability table [len x V]; row t is the
// distribution after seeing tokens 0..t.
template <typename S>
Tensor<S> logprobs(Policy<S>& policy, const std::vector<int>& tokens) {
    Tape<S> tape;
    PolicyGraph<S> graph(tape, policy, /*trainable=*/false);
    const auto logits = graph.forward(tokens);
    return tape.value(tape.log_softmax_rows(logits));
}

// Sum of realized-token log-probabilities over [from, to) given the prefix.
template <typename S>
double sequence_logprob(Policy<S>& policy, const std::vector<int>& tokens, std::size_t from,
                        std::size_t to) {
    if (from == 0 || to > tokens.size() || from > to)
        throw ContractError("sequence_logprob range must start after a nonempty prefix");
    const Tensor<S> table = logprobs(policy, tokens);
    double total = 0.0;
    for (std::size_t t = from; t < to; ++t)
        total += static_cast<double>(table.at(t - 1, static_cast<std::size_t>(tokens[t])));
    return total;
}

template <typename S>
struct SampleResult {
    std::vector<int> tokens;    // completion only, including the stop token if hit
    std::vector<S> logprobs;    // log-prob of each sampled token under the sampling policy
    bool hit_stop = false;
};

// Autoregressive sampling from the policy. temperature 0 is greedy argmax;
// stop < 0 disables the stop check. Deterministic per seed.
template <typename S>
SampleResult<S> sample(Policy<S>& policy, const std::vector<int>& prompt, int max_new,
                       double temperature, int stop, std::uint64_t seed) {
    if (max_new < 1) throw ContractError("sample: max_new must be >= 1");
    if (temperature < 0) throw ContractError("sample: temperature must be nonnegative");
    if (prompt.empty()) throw ContractError("sample: empty prompt");
    const auto ctx = static_cast<std::size_t>(policy.config.context_length);
    if (prompt.size() + 1 > ctx)
        throw ContractError("sample: prompt leaves no room in the context window");

    Rng rng(seed);
    SampleResult<S> result;
    std::vector<int> seq = prompt;
    const auto vocab = static_cast<std::size_t>(policy.config.vocab_size);

    while (result.tokens.size() < static_cast<std::size_t>(max_new) && seq.size() < ctx) {
        Tape<S> tape;
        PolicyGraph<S> graph(tape, policy, /*trainable=*/false);
        const auto logits_ref = graph.forward(seq);
        const Tensor<S>& logits = tape.value(logits_ref);
        const std::size_t last = logits.rows() - 1;

        int choice;
        S logprob;
        if (temperature == 0.0) {
            std::size_t best = 0;
            for (std::size_t j = 1; j < vocab; ++j)
                if (logits.at(last, j) > logits.at(last, best)) best = j;
            choice = static_cast<int>(best);
            logprob = S(0);  // point mass
        } else {
            Tensor<S> row({1, vocab});
            for (std::size_t j = 0; j < vocab; ++j)
                row.at(0, j) = logits.at(last, j) / static_cast<S>(temperature);
            const Tensor<S> lp = log_softmax(row);
            std::vector<double> weights(vocab);
            for (std::size_t j = 0; j < vocab; ++j)
                weights[j] = std::exp(static_cast<double>(lp.at(0, j)));
            choice = static_cast<int>(rng.next_categorical(weights));
            logprob = lp.at(0, static_cast<std::size_t>(choice));
        }

        result.tokens.push_back(choice);
        result.logprobs.push_back(logprob);
        seq.push_back(choice);
        if (stop >= 0 && choice == stop) {
            result.hit_stop = true;
            break;
        }
    }
    return result;
}

}  // namespace bridge
