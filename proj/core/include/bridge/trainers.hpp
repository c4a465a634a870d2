#pragma once

#include <algorithm>
#include <cmath>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "bridge/adam.hpp"
#include "bridge/corpus.hpp"
#include "bridge/langid.hpp"
#include "bridge/policy.hpp"
#include "bridge/rewards.hpp"
#include "bridge/rng.hpp"
#include "bridge/tape.hpp"
#include "bridge/tokens.hpp"
#include "bridge/translator.hpp"

namespace bridge {

// ---- group-relative advantages ----

// A_i = (r_i - mean(r)) / (std(r) + 1e-4), population std. A zero-variance
// group yields all-zero advantages.
std::vector<double> compute_advantages(const std::vector<double>& rewards);

// Nonnegative per-token KL estimate: exp(d) - d - 1 with d = logp_base -
// logp_theta. Its mean over tokens sampled from pi_theta estimates
// KL(pi_theta || pi_base).
inline double kl_per_token(double logp_base, double logp_theta) {
    const double d = logp_base - logp_theta;
    return std::exp(d) - d - 1.0;
}

// ---- cosine learning-rate schedule with linear warmup ----

inline double cosine_lr(long step, long total_steps, double lr_max, double min_lr,
                        double warmup_ratio) {
    if (total_steps <= 0) return lr_max;
    const long warmup = static_cast<long>(
        std::ceil(warmup_ratio * static_cast<double>(total_steps)));
    if (step < warmup)
        return lr_max * static_cast<double>(step + 1) / static_cast<double>(warmup);
    const long rest = total_steps - warmup;
    const double progress =
        rest <= 0 ? 1.0 : static_cast<double>(step - warmup) / static_cast<double>(rest);
    return min_lr + (lr_max - min_lr) * 0.5 *
                        (1.0 + std::cos(3.14159265358979323846 * progress));
}

// ---- GRPO group ----

template <typename S>
struct GrpoCompletion {
    std::vector<int> tokens;      // completion token ids (stop included if hit)
    std::vector<S> logp_old;      // per-token log-probs under the sampling snapshot
    std::vector<S> logp_base;     // per-token log-probs under the frozen base
    std::vector<S> logp_theta;    // per-token log-probs under the current policy
    typename Tape<S>::Ref theta_ref = -1;  // differentiable counterpart of logp_theta
    double reward = 0.0;
    double advantage = 0.0;
    RewardBreakdown breakdown;
    std::string text;             // decoded output, kept for logs
};

template <typename S>
struct GrpoGroup {
    std::vector<int> prompt;  // translated question tokens, prompt-end included
    std::string target_language;
    std::vector<GrpoCompletion<S>> completions;
};

// Realized-token log-probs of `completion` given `prompt` in one forward.
template <typename S>
std::vector<S> realized_logprobs(Policy<S>& policy, const std::vector<int>& prompt,
                                 const std::vector<int>& completion) {
    std::vector<int> full = prompt;
    full.insert(full.end(), completion.begin(), completion.end());
    const Tensor<S> table = logprobs(policy, full);
    std::vector<S> out(completion.size());
    for (std::size_t t = 0; t < completion.size(); ++t)
        out[t] = table.at(prompt.size() - 1 + t, static_cast<std::size_t>(completion[t]));
    return out;
}

// Builds the differentiable per-token log pi_theta vectors for every
// completion in the group, against an already-bound policy graph.
template <typename S>
void attach_theta_logprobs(Tape<S>& tape, PolicyGraph<S>& graph, GrpoGroup<S>& group) {
    for (auto& c : group.completions) {
        if (c.tokens.empty()) continue;
        std::vector<int> full = group.prompt;
        full.insert(full.end(), c.tokens.begin(), c.tokens.end());
        const auto logits = graph.forward(full);
        const auto rows = tape.slice_rows(logits, group.prompt.size() - 1, c.tokens.size());
        c.theta_ref = tape.gather_logprobs(rows, c.tokens);
        const Tensor<S>& vals = tape.value(c.theta_ref);
        c.logp_theta.assign(vals.values.begin(), vals.values.end());
    }
}

// Per-completion KL estimates from the stored log-prob vectors.
template <typename S>
std::vector<double> kl_term(const GrpoGroup<S>& group) {
    std::vector<double> out;
    out.reserve(group.completions.size());
    for (const auto& c : group.completions) {
        if (c.tokens.empty() || c.logp_theta.empty()) {
            out.push_back(0.0);
            continue;
        }
        double total = 0.0;
        for (std::size_t t = 0; t < c.tokens.size(); ++t)
            total += kl_per_token(static_cast<double>(c.logp_base[t]),
                                  static_cast<double>(c.logp_theta[t]));
        out.push_back(total / static_cast<double>(c.tokens.size()));
    }
    return out;
}

template <typename S>
struct GrpoLossInfo {
    typename Tape<S>::Ref loss = -1;
    int included = 0;
    int skipped_empty = 0;
    std::vector<double> surrogates;  // per included completion, token-averaged
    std::vector<double> kls;
};

// The clipped-surrogate loss with KL penalty over one group:
//   loss = -(1/G) sum_i [ mean_t min(rho_t*A_i, clip(rho_t, 1-eps, 1+eps)*A_i)
//                         - beta * mean_t (exp(d_t) - d_t - 1) ]
// with rho_t = exp(logp_theta - logp_old) per completion token. Completions
// must have theta_ref attached; empty ones are excluded.
template <typename S>
GrpoLossInfo<S> grpo_loss(Tape<S>& tape, const GrpoGroup<S>& group, double eps, double beta) {
    if (eps <= 0) throw ContractError("grpo_loss: eps must be positive");
    if (beta < 0) throw ContractError("grpo_loss: beta must be nonnegative");
    if (group.completions.size() < 2)
        throw ContractError("grpo_loss: group must hold at least 2 completions");

    GrpoLossInfo<S> info;
    typename Tape<S>::Ref total = -1;
    for (const auto& c : group.completions) {
        if (c.tokens.empty() || c.theta_ref < 0) {
            ++info.skipped_empty;
            continue;
        }
        const auto old_ref = tape.constant(Tensor<S>::row(
            std::vector<S>(c.logp_old.begin(), c.logp_old.end())));
        const auto ratio = tape.exp(tape.sub(c.theta_ref, old_ref));
        const S adv = static_cast<S>(c.advantage);
        const auto unclipped = tape.scale(ratio, adv);
        const auto clipped =
            tape.scale(tape.clip(ratio, S(1.0 - eps), S(1.0 + eps)), adv);
        const auto surrogate = tape.mean(tape.min_elem(unclipped, clipped));

        auto term = surrogate;
        double kl_value = 0.0;
        {
            const auto base_ref = tape.constant(Tensor<S>::row(
                std::vector<S>(c.logp_base.begin(), c.logp_base.end())));
            const auto d = tape.sub(base_ref, c.theta_ref);
            const auto kl_tok = tape.add_scalar(tape.sub(tape.exp(d), d), S(-1));
            const auto kl = tape.mean(kl_tok);
            kl_value = static_cast<double>(tape.value(kl).item());
            if (beta > 0) term = tape.sub(surrogate, tape.scale(kl, static_cast<S>(beta)));
        }

        info.surrogates.push_back(static_cast<double>(tape.value(surrogate).item()));
        info.kls.push_back(kl_value);
        total = info.included == 0 ? term : tape.add(total, term);
        ++info.included;
    }

    if (info.included == 0) {
        info.loss = tape.constant(Tensor<S>::scalar(S(0)));
        return info;
    }
    info.loss = tape.scale(total, S(-1.0 / static_cast<double>(info.included)));
    return info;
}

// ---- SFT loss ----

template <typename S>
struct SftLossInfo {
    typename Tape<S>::Ref loss = -1;
    int used = 0;
    int skipped_overlong = 0;
    long target_tokens = 0;
};

// Cross-entropy over the reasoning+answer target region, conditioned on the
// question (mask_target_only), or over the whole sequence for pretraining.
// reduction Sum adds the per-record sums; Mean divides by the total number of
// target tokens.
template <typename S>
SftLossInfo<S> sft_loss(Tape<S>& tape, PolicyGraph<S>& graph, const std::vector<Record>& batch,
                        Reduction reduction = Reduction::Sum, bool mask_target_only = true) {
    SftLossInfo<S> info;
    typename Tape<S>::Ref total = -1;
    for (const auto& record : batch) {
        const TokenSequence seq =
            render_example(record.question, record.reasoning, record.answer);
        if (seq.ids.size() < 2) continue;
        if (!graph.fits(seq.ids.size())) {
            ++info.skipped_overlong;
            std::cerr << "[sft] skipping overlong record " << record.id << " ("
                      << seq.ids.size() << " tokens)\n";
            continue;
        }
        const std::size_t first_target =
            mask_target_only ? static_cast<std::size_t>(seq.prompt_end) + 1 : 1;
        if (first_target >= seq.ids.size()) continue;

        const auto logits = graph.forward(seq.ids);
        const auto rows =
            tape.slice_rows(logits, first_target - 1, seq.ids.size() - first_target);
        const std::vector<int> targets(seq.ids.begin() + static_cast<long>(first_target),
                                       seq.ids.end());
        const auto record_loss = tape.cross_entropy(rows, targets, Reduction::Sum);
        total = info.used == 0 ? record_loss : tape.add(total, record_loss);
        info.target_tokens += static_cast<long>(targets.size());
        ++info.used;
    }
    if (info.used == 0) {
        info.loss = tape.constant(Tensor<S>::scalar(S(0)));
        return info;
    }
    info.loss = reduction == Reduction::Mean
                    ? tape.scale(total, S(1.0 / static_cast<double>(info.target_tokens)))
                    : total;
    return info;
}

// ---- training driver ----

enum class RunKind { Sft, Grpo, Bridge };

RunKind run_kind_from_string(const std::string& s);
const char* run_kind_name(RunKind kind);

struct StepLog {
    long step = 0;
    int epoch = 0;
    std::string kind;
    double lr = 0.0;
    double loss = 0.0;
    double loss_sft = 0.0;
    double loss_grpo = 0.0;
    int gate = 0;  // the Bernoulli draw m
    double reward_mean = 0.0;
    double kl_mean = 0.0;
    int skipped = 0;
    std::string target_language;
};

std::string step_log_to_json_line(const StepLog& log);

template <typename S>
struct TrainState {
    long step = 0;
    int epoch = 0;
    long total_steps = 0;
    AdamState<S> adam;
    Rng gate_rng;    // consumed only by the Bernoulli gate
    Rng data_rng;    // batch shuffling
    Rng grpo_rng;    // question/language picks and sampling seeds
    std::optional<Policy<S>> frozen_base;
    std::vector<StepLog> logs;
};

template <typename S>
void init_train_state(TrainState<S>& state, const RunConfig& config, long total_steps,
                      Policy<S>& policy) {
    Rng master(config.seed);
    state.gate_rng = master.fork();
    state.data_rng = master.fork();
    state.grpo_rng = master.fork();
    state.total_steps = total_steps;
    state.adam.lr = config.optimizer.lr;
    state.adam.beta1 = config.optimizer.beta1;
    state.adam.beta2 = config.optimizer.beta2;
    state.adam.weight_decay = config.optimizer.weight_decay;
    state.frozen_base = freeze(policy);
}

namespace detail {

// Samples a group from the snapshot policy, scores it, and attaches the
// differentiable theta log-probs. Returns false when translation fails.
template <typename S>
bool build_grpo_group(Tape<S>& tape, PolicyGraph<S>& graph, Policy<S>& policy,
                      TrainState<S>& state, const std::vector<Record>& grpo_pool,
                      const Translator& translator, const Identifier& identifier,
                      const RunConfig& config, GrpoGroup<S>& group) {
    const Record& picked = grpo_pool[state.grpo_rng.next_below(grpo_pool.size())];
    std::string target = config.translator_policy;
    if (target == "uniform")
        target = config.languages[state.grpo_rng.next_below(config.languages.size())];

    Record translated;
    try {
        translated = translator.translate_record(picked, target);
    } catch (const TranslationError& e) {
        std::cerr << "[grpo] translation failed, skipping gated step: " << e.what() << "\n";
        return false;
    }

    group.target_language = target;
    const TokenSequence prompt = render_prompt(translated.question);
    group.prompt = prompt.ids;
    const int context = policy.config.context_length;
    if (group.prompt.size() + 1 >= static_cast<std::size_t>(context)) {
        std::cerr << "[grpo] prompt too long for context, skipping gated step\n";
        return false;
    }

    Policy<S> old_policy = snapshot(policy);
    const int room = context - static_cast<int>(group.prompt.size()) - 1;
    const int max_new = std::min(config.grpo.max_completion_tokens, room);

    const RewardSpec spec = RewardSpec::from_config(config.rewards);
    std::vector<double> rewards;
    for (int i = 0; i < config.grpo.group_size; ++i) {
        GrpoCompletion<S> c;
        const auto sampled = sample(old_policy, group.prompt, max_new,
                                    config.grpo.temperature, tok::kStop,
                                    state.grpo_rng.next_u64());
        c.tokens = sampled.tokens;
        c.text = decode(c.tokens);
        c.breakdown = composite(c.text, translated, spec, identifier);
        c.reward = c.breakdown.total;
        c.logp_old = realized_logprobs(old_policy, group.prompt, c.tokens);
        c.logp_base = realized_logprobs(*state.frozen_base, group.prompt, c.tokens);
        rewards.push_back(c.reward);
        group.completions.push_back(std::move(c));
    }

    const std::vector<double> advantages = compute_advantages(rewards);
    for (std::size_t i = 0; i < group.completions.size(); ++i)
        group.completions[i].advantage = advantages[i];

    attach_theta_logprobs(tape, graph, group);
    return true;
}

}  // namespace detail

// One combined optimizer step: loss = L_SFT(sft_batch) + m * L_GRPO with
// m ~ Bernoulli(p) from the gate stream. A failed translation downgrades the
// step to plain SFT.
template <typename S>
StepLog bridge_step(TrainState<S>& state, Policy<S>& policy,
                    const std::vector<Record>& sft_batch,
                    const std::vector<Record>& grpo_pool, const Translator* translator,
                    const Identifier* identifier, const RunConfig& config,
                    bool force_gate = false, bool sft_term = true) {
    StepLog log;
    log.step = state.step;
    log.epoch = state.epoch;

    bool gated = force_gate || state.gate_rng.next_bernoulli(config.gate_probability);
    if (gated && (grpo_pool.empty() || translator == nullptr || identifier == nullptr))
        throw ConfigError("gated step requires a GRPO pool, translator, and identifier");

    Tape<S> tape;
    PolicyGraph<S> graph(tape, policy, /*trainable=*/true);

    typename Tape<S>::Ref loss_ref = -1;
    if (sft_term) {
        const auto reduction =
            config.sft.reduction == "mean" ? Reduction::Mean : Reduction::Sum;
        const auto sft = sft_loss(tape, graph, sft_batch, reduction,
                                  config.sft.mask == "target_only");
        log.loss_sft = static_cast<double>(tape.value(sft.loss).item());
        log.skipped = sft.skipped_overlong;
        loss_ref = sft.loss;
    }

    if (gated) {
        GrpoGroup<S> group;
        if (detail::build_grpo_group(tape, graph, policy, state, grpo_pool, *translator,
                                     *identifier, config, group)) {
            const auto grpo = grpo_loss(tape, group, config.grpo.clip_eps,
                                        config.grpo.kl_beta);
            log.gate = 1;
            log.loss_grpo = static_cast<double>(tape.value(grpo.loss).item());
            log.target_language = group.target_language;
            double reward_total = 0.0;
            for (const auto& c : group.completions) reward_total += c.reward;
            log.reward_mean =
                reward_total / static_cast<double>(group.completions.size());
            double kl_total = 0.0;
            for (double k : grpo.kls) kl_total += k;
            log.kl_mean = grpo.kls.empty()
                              ? 0.0
                              : kl_total / static_cast<double>(grpo.kls.size());
            loss_ref = loss_ref < 0 ? grpo.loss : tape.add(loss_ref, grpo.loss);
        }
    }

    if (loss_ref < 0) loss_ref = tape.constant(Tensor<S>::scalar(S(0)));
    log.loss = static_cast<double>(tape.value(loss_ref).item());

    auto grads_by_ref = tape.backward(loss_ref);
    auto params = policy.parameters();
    const auto& refs = graph.param_refs();
    std::vector<Tensor<S>> grads;
    grads.reserve(params.size());
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto it = grads_by_ref.find(refs[k]);
        grads.push_back(it == grads_by_ref.end() ? Tensor<S>(params[k]->shape)
                                                 : std::move(it->second));
    }

    state.adam.lr = cosine_lr(state.step, state.total_steps, config.optimizer.lr,
                              config.optimizer.min_lr, config.optimizer.warmup_ratio);
    log.lr = state.adam.lr;
    adam_step(params, grads, state.adam);

    ++state.step;
    return log;
}

template <typename S>
struct TrainResult {
    Policy<S> policy;
    std::vector<StepLog> logs;
};

inline RunConfig disable_gate(const RunConfig& config) {
    RunConfig c = config;
    c.gate_probability = 0.0;
    return c;
}

// Full training run. sft and bridge sweep epochs over the SFT set; grpo runs
// pure gated steps up to grpo.max_steps.
template <typename S>
TrainResult<S> train(RunKind kind, const RunConfig& config,
                     const std::vector<Record>& sft_data,
                     const std::vector<Record>& grpo_data, const Translator* translator,
                     const Identifier* identifier,
                     std::optional<Policy<S>> initial_policy = std::nullopt) {
    config.validate();
    if (kind != RunKind::Grpo && sft_data.empty())
        throw ConfigError("this run kind needs a nonempty SFT dataset");
    if (kind != RunKind::Sft) {
        if (grpo_data.empty()) throw ConfigError("this run kind needs a GRPO dataset");
        if (translator == nullptr) throw ConfigError("this run kind needs a translator");
        if (identifier == nullptr) throw ConfigError("this run kind needs an identifier");
        if (config.languages.empty())
            throw ConfigError("this run kind needs a configured language set");
    }

    Policy<S> policy =
        initial_policy.has_value() ? std::move(*initial_policy) : init_policy<S>(config.policy);
    policy.role = PolicyRole::Current;

    TrainState<S> state;
    const int batch = config.optimizer.batch_size;
    long total_steps;
    if (kind == RunKind::Grpo) {
        total_steps = config.grpo.max_steps;
    } else {
        const long per_epoch =
            (static_cast<long>(sft_data.size()) + batch - 1) / batch;
        total_steps = per_epoch * config.optimizer.epochs;
    }
    init_train_state(state, config, total_steps, policy);

    TrainResult<S> result;
    if (kind == RunKind::Grpo) {
        for (int s = 0; s < config.grpo.max_steps; ++s) {
            StepLog log = bridge_step(state, policy, {}, grpo_data, translator, identifier,
                                      config, /*force_gate=*/true, /*sft_term=*/false);
            log.kind = run_kind_name(kind);
            state.logs.push_back(log);
        }
    } else {
        const bool allow_gate = kind == RunKind::Bridge;
        const RunConfig effective = allow_gate ? config : disable_gate(config);
        std::vector<std::size_t> order(sft_data.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        for (int epoch = 0; epoch < config.optimizer.epochs; ++epoch) {
            state.epoch = epoch;
            state.data_rng.shuffle(order);
            for (std::size_t start = 0; start < order.size();
                 start += static_cast<std::size_t>(batch)) {
                std::vector<Record> batch_records;
                for (std::size_t i = start;
                     i < std::min(order.size(), start + static_cast<std::size_t>(batch)); ++i)
                    batch_records.push_back(sft_data[order[i]]);
                StepLog log = bridge_step(
                    state, policy, batch_records, grpo_data,
                    allow_gate ? translator : nullptr, allow_gate ? identifier : nullptr,
                    effective, /*force_gate=*/false, /*sft_term=*/true);
                log.kind = run_kind_name(kind);
                state.logs.push_back(log);
            }
        }
    }

    result.policy = std::move(policy);
    result.logs = std::move(state.logs);
    return result;
}

}  // namespace bridge
