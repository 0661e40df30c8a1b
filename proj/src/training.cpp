#include "claimcheck/training.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "claimcheck/errors.hpp"
#include "claimcheck/io.hpp"
#include "claimcheck/predict.hpp"
#include "claimcheck/weak_supervision.hpp"

namespace claimcheck {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

void StageConfig::validate() const
{
    if (datasets.empty()) {
        throw ValidationError("training config needs at least one dataset");
    }
    for (const auto& d : datasets) {
        if (!(d.weight > 0.0)) {
            throw ValidationError("dataset weight must be positive: " + d.claims);
        }
    }
    if (epochs < 1 || batch_size < 1) {
        throw ValidationError("epochs and batch_size must be >= 1");
    }
    if (!(learning_rate > 0.0) || !(warmup_fraction >= 0.0 && warmup_fraction <= 1.0)) {
        throw ValidationError("learning_rate must be > 0 and warmup_fraction in [0, 1]");
    }
    if (!(lambda_rationale >= 0.0)) {
        throw ValidationError("lambda_rationale must be >= 0");
    }
    if (patience < 1) {
        throw ValidationError("patience must be >= 1");
    }
    if (!(threshold > 0.0 && threshold < 1.0)) {
        throw ValidationError("threshold must lie strictly between 0 and 1");
    }
    if (few_shot && *few_shot < 1) {
        throw ValidationError("few_shot must be >= 1");
    }
    if (resume_optimizer && checkpoint_in.empty()) {
        throw ValidationError("resume_optimizer needs checkpoint_in");
    }
    model.validate();
}

// ---------------------------------------------------------------------------
// config file

namespace {

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_ws(const std::string& s)
{
    std::istringstream in(s);
    std::vector<std::string> out;
    for (std::string w; in >> w;) {
        out.push_back(w);
    }
    return out;
}

template <typename T>
T parse_number(const std::string& text, const std::string& path, std::size_t line, const std::string& key)
{
    T value{};
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end) {
        throw ParseError(path, line, "invalid value '" + text + "' for " + key);
    }
    return value;
}

bool parse_bool(const std::string& text, const std::string& path, std::size_t line, const std::string& key)
{
    if (text == "true" || text == "1" || text == "yes") {
        return true;
    }
    if (text == "false" || text == "0" || text == "no") {
        return false;
    }
    throw ParseError(path, line, "invalid boolean '" + text + "' for " + key);
}

std::string resolve(const fs::path& base, const std::string& p)
{
    if (p.empty()) {
        return p;
    }
    const fs::path path(p);
    return fs::absolute(path.is_absolute() ? path : base / path).lexically_normal().string();
}

std::string format_double(double x)
{
    // shortest representation that round-trips
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    (void)ec;
    return std::string(buf, ptr);
}

}  // namespace

StageConfig parse_stage_config(const std::string& path)
{
    auto in = open_input(path);
    const fs::path base = fs::path(path).parent_path();
    StageConfig cfg;
    bool seen_datasets = false;
    std::set<std::string> seen;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        const auto text = trim(line);
        if (text.empty()) {
            continue;
        }
        const auto eq = text.find('=');
        if (eq == std::string::npos) {
            throw ParseError(path, number, "expected 'key = value'");
        }
        const auto key = trim(std::string_view(text).substr(0, eq));
        const auto value = trim(std::string_view(text).substr(eq + 1));
        if (key != "dataset" && !seen.insert(key).second) {
            throw ParseError(path, number, "duplicate key '" + key + "'");
        }
        auto num_i = [&] { return parse_number<int>(value, path, number, key); };
        auto num_u = [&] { return parse_number<std::uint64_t>(value, path, number, key); };
        auto num_d = [&] { return parse_number<double>(value, path, number, key); };
        auto& enc = cfg.model.encoder;

        if (key == "dataset" || key == "dev") {
            const auto parts = split_ws(value);
            const std::size_t max_parts = key == "dataset" ? 4 : 2;
            if (parts.size() < 2 || parts.size() > max_parts) {
                throw ParseError(path, number,
                                 key == "dataset" ? "dataset = <claims> <corpus> [weight] [negatives]"
                                                  : "dev = <claims> <corpus>");
            }
            DatasetSpec d;
            d.claims = resolve(base, parts[0]);
            d.corpus = resolve(base, parts[1]);
            if (parts.size() > 2) {
                d.weight = parse_number<double>(parts[2], path, number, "dataset weight");
            }
            if (parts.size() > 3) {
                d.negatives = resolve(base, parts[3]);
            }
            if (key == "dev") {
                cfg.dev = d;
            } else {
                cfg.datasets.push_back(d);
                seen_datasets = true;
            }
        } else if (key == "name") {
            cfg.name = value;
        } else if (key == "epochs") {
            cfg.epochs = num_i();
        } else if (key == "batch_size") {
            cfg.batch_size = num_i();
        } else if (key == "learning_rate") {
            cfg.learning_rate = num_d();
        } else if (key == "warmup_fraction") {
            cfg.warmup_fraction = num_d();
        } else if (key == "lambda_rationale") {
            cfg.lambda_rationale = num_d();
        } else if (key == "seed") {
            cfg.seed = num_u();
        } else if (key == "max_length") {
            cfg.max_length = num_i();
        } else if (key == "patience") {
            cfg.patience = num_i();
        } else if (key == "threshold") {
            cfg.threshold = num_d();
        } else if (key == "provenance") {
            cfg.provenance.clear();
            std::string v = value;
            std::replace(v.begin(), v.end(), ',', ' ');
            for (const auto& p : split_ws(v)) {
                std::string upper = p;
                std::transform(upper.begin(), upper.end(), upper.begin(),
                               [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
                auto prov = parse_provenance(upper);
                if (!prov) {
                    throw ParseError(path, number, "unknown provenance '" + p + "'");
                }
                cfg.provenance.push_back(*prov);
            }
        } else if (key == "few_shot") {
            cfg.few_shot = num_i();
        } else if (key == "few_shot_seed") {
            cfg.few_shot_seed = num_u();
        } else if (key == "vocab_size") {
            enc.vocab_size = num_i();
        } else if (key == "hidden") {
            enc.hidden = num_i();
        } else if (key == "layers") {
            enc.layers = num_i();
        } else if (key == "window") {
            enc.window = num_i();
        } else if (key == "ffn") {
            enc.ffn = num_i();
        } else if (key == "relative_radius") {
            enc.relative_radius = num_i();
        } else if (key == "head_hidden") {
            cfg.model.head_hidden = num_i();
        } else if (key == "checkpoint_in") {
            cfg.checkpoint_in = resolve(base, value);
        } else if (key == "resume_optimizer") {
            cfg.resume_optimizer = parse_bool(value, path, number, key);
        } else if (key == "checkpoint_out") {
            cfg.checkpoint_out = resolve(base, value);
        } else if (key == "log") {
            cfg.log = resolve(base, value);
        } else if (key == "probe_log") {
            cfg.probe_log = resolve(base, value);
        } else {
            throw ParseError(path, number, "unknown key '" + key + "'");
        }
    }
    if (!seen_datasets) {
        throw ParseError(path, number, "no 'dataset' entries");
    }
    cfg.model.encoder.max_length = cfg.max_length;
    cfg.model.seed = cfg.seed;
    cfg.validate();
    return cfg;
}

std::string format_stage_config(const StageConfig& cfg)
{
    std::ostringstream out;
    out << "name = " << cfg.name << '\n';
    for (const auto& d : cfg.datasets) {
        out << "dataset = " << d.claims << ' ' << d.corpus << ' ' << format_double(d.weight);
        if (!d.negatives.empty()) {
            out << ' ' << d.negatives;
        }
        out << '\n';
    }
    if (cfg.dev) {
        out << "dev = " << cfg.dev->claims << ' ' << cfg.dev->corpus << '\n';
    }
    out << "epochs = " << cfg.epochs << '\n'
        << "batch_size = " << cfg.batch_size << '\n'
        << "learning_rate = " << format_double(cfg.learning_rate) << '\n'
        << "warmup_fraction = " << format_double(cfg.warmup_fraction) << '\n'
        << "lambda_rationale = " << format_double(cfg.lambda_rationale) << '\n'
        << "seed = " << cfg.seed << '\n'
        << "max_length = " << cfg.max_length << '\n'
        << "patience = " << cfg.patience << '\n'
        << "threshold = " << format_double(cfg.threshold) << '\n';
    out << "provenance = ";
    for (std::size_t i = 0; i < cfg.provenance.size(); ++i) {
        out << (i ? "," : "") << provenance_name(cfg.provenance[i]);
    }
    out << '\n';
    if (cfg.few_shot) {
        out << "few_shot = " << *cfg.few_shot << '\n';
    }
    out << "few_shot_seed = " << cfg.few_shot_seed << '\n';
    const auto& e = cfg.model.encoder;
    out << "vocab_size = " << e.vocab_size << '\n'
        << "hidden = " << e.hidden << '\n'
        << "layers = " << e.layers << '\n'
        << "window = " << e.window << '\n'
        << "ffn = " << e.ffn << '\n'
        << "relative_radius = " << e.relative_radius << '\n'
        << "head_hidden = " << cfg.model.head_hidden << '\n';
    auto opt = [&](const char* key, const std::string& v) {
        if (!v.empty()) {
            out << key << " = " << v << '\n';
        }
    };
    opt("checkpoint_in", cfg.checkpoint_in);
    out << "resume_optimizer = " << (cfg.resume_optimizer ? "true" : "false") << '\n';
    opt("checkpoint_out", cfg.checkpoint_out);
    opt("log", cfg.log);
    opt("probe_log", cfg.probe_log);
    return out.str();
}

// ---------------------------------------------------------------------------
// data

ExampleSet build_examples(const VerifierModel& model, const std::vector<Claim>& claims, const Corpus& corpus,
                          const std::map<int, std::vector<int>>& negatives)
{
    ExampleSet set;
    for (const auto& claim : claims) {
        std::set<int> docs;
        for (int d : oracle_candidates(claim)) {
            docs.insert(d);
        }
        if (auto it = negatives.find(claim.id); it != negatives.end()) {
            for (int d : it->second) {
                if (claim.evidence.count(d) != 0) {
                    throw ValidationError("claim " + std::to_string(claim.id) + ": negative doc " + std::to_string(d) +
                                          " is gold evidence");
                }
                docs.insert(d);
            }
        }
        for (int doc_id : docs) {
            const auto* doc = corpus.find(doc_id);
            if (doc == nullptr) {
                throw ValidationError("claim " + std::to_string(claim.id) + ": unknown doc " + std::to_string(doc_id));
            }
            TrainingExample ex;
            ex.claim_id = claim.id;
            ex.doc_id = doc_id;
            try {
                ex.input = model.assemble(claim.text, *doc);
            } catch (const ValidationError&) {
                ++set.skipped;
                continue;
            }
            const std::size_t retained = ex.input.retained_sentences();
            auto ev = claim.evidence.find(doc_id);
            if (ev == claim.evidence.end()) {
                ex.label = Label::Nei;
                ex.targets = std::vector<std::uint8_t>(retained, 0);
            } else {
                ex.label = ev->second.label;
                if (ev->second.has_rationales()) {
                    const auto gold = ev->second.sentence_union();
                    ex.targets = rationale_targets(gold, retained);
                }
            }
            set.examples.push_back(std::move(ex));
        }
    }
    return set;
}

std::vector<Claim> sample_few_shot(const std::vector<Claim>& claims, int n, std::uint64_t seed)
{
    if (n < 0) {
        throw ValidationError("few-shot size must be non-negative");
    }
    if (static_cast<std::size_t>(n) > claims.size()) {
        throw ValidationError("few-shot size " + std::to_string(n) + " exceeds the " + std::to_string(claims.size()) +
                              " available claims");
    }
    if (static_cast<std::size_t>(n) == claims.size()) {
        return claims;
    }
    std::mt19937_64 rng(seed);
    std::vector<Claim> out;
    std::sample(claims.begin(), claims.end(), std::back_inserter(out), n, rng);
    return out;
}

std::vector<Claim> filter_provenance(const std::vector<Claim>& claims, const std::vector<Provenance>& keep)
{
    std::vector<Claim> out;
    for (const auto& c : claims) {
        if (std::find(keep.begin(), keep.end(), c.provenance) != keep.end()) {
            out.push_back(c);
        }
    }
    return out;
}

double scheduled_lr(double base, std::int64_t step, std::int64_t total, double warmup_fraction)
{
    const auto warmup = static_cast<std::int64_t>(std::ceil(warmup_fraction * static_cast<double>(total)));
    if (step <= warmup) {
        return base * static_cast<double>(step) / static_cast<double>(warmup);
    }
    const double remaining = static_cast<double>(std::max<std::int64_t>(total - step + 1, 0));
    return base * remaining / static_cast<double>(total - warmup + 1);
}

// ---------------------------------------------------------------------------
// optimizer

GroupedAdam::GroupedAdam(std::size_t size, std::pair<std::size_t, std::size_t> rationale_range)
    : m_rationale(rationale_range)
{
    m_state.m.assign(size, 0.0);
    m_state.v.assign(size, 0.0);
}

GroupedAdam::GroupedAdam(AdamState state, std::pair<std::size_t, std::size_t> rationale_range)
    : m_state(std::move(state)), m_rationale(rationale_range)
{}

void GroupedAdam::update_range(std::span<double> params, std::span<const double> grad, double lr, std::size_t begin,
                               std::size_t end, std::int64_t t)
{
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t));
    auto& m = m_state.m;
    auto& v = m_state.v;
    for (std::size_t i = begin; i < end; ++i) {
        const double g = grad[i];
        m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * g;
        v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * g * g;
        params[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + kEps);
    }
}

void GroupedAdam::step(std::span<double> params, std::span<const double> grad, double lr, bool update_rationale_head)
{
    if (params.size() != m_state.m.size() || grad.size() != params.size()) {
        throw std::invalid_argument("optimizer size mismatch");
    }
    ++m_state.step;
    const std::int64_t tb = ++m_state.body_updates;
    update_range(params, grad, lr, 0, m_rationale.first, tb);
    update_range(params, grad, lr, m_rationale.second, params.size(), tb);
    if (update_rationale_head) {
        const std::int64_t tr = ++m_state.rationale_updates;
        update_range(params, grad, lr, m_rationale.first, m_rationale.second, tr);
    }
}

// ---------------------------------------------------------------------------
// training loop

namespace {

struct LoadedDataset {
    ExampleSet set;
    double weight = 1.0;
};

struct DevSet {
    Corpus corpus;
    std::vector<Claim> claims;
};

ordered_json metrics_json(const std::vector<MetricResult>& results)
{
    ordered_json j = ordered_json::object();
    for (const auto& r : results) {
        j[std::string(variant_key(r.variant))] = {{"precision", r.precision}, {"recall", r.recall}, {"f1", r.f1}};
    }
    return j;
}

double label_rationale_f1(const std::vector<MetricResult>& results)
{
    for (const auto& r : results) {
        if (r.variant == MetricVariant::AbstractLabelRationale) {
            return r.f1;
        }
    }
    return 0.0;
}

/// Indices into the concatenated example pool for one epoch: floor(weight)
/// full copies of each dataset plus a seeded sample covering the fraction.
std::vector<std::pair<std::size_t, std::size_t>> epoch_order(const std::vector<LoadedDataset>& data,
                                                             std::uint64_t seed, int epoch)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(epoch)};
    std::mt19937_64 rng(seq);
    std::vector<std::pair<std::size_t, std::size_t>> order;
    for (std::size_t d = 0; d < data.size(); ++d) {
        const std::size_t n = data[d].set.examples.size();
        const double w = data[d].weight;
        const auto copies = static_cast<std::size_t>(std::floor(w));
        for (std::size_t c = 0; c < copies; ++c) {
            for (std::size_t i = 0; i < n; ++i) {
                order.emplace_back(d, i);
            }
        }
        const auto extra = static_cast<std::size_t>(std::llround((w - static_cast<double>(copies)) * static_cast<double>(n)));
        if (extra > 0) {
            std::vector<std::size_t> idx(n);
            std::iota(idx.begin(), idx.end(), 0);
            std::vector<std::size_t> pick;
            std::sample(idx.begin(), idx.end(), std::back_inserter(pick), extra, rng);
            for (auto i : pick) {
                order.emplace_back(d, i);
            }
        }
    }
    std::shuffle(order.begin(), order.end(), rng);
    return order;
}

std::size_t epoch_size(const std::vector<LoadedDataset>& data)
{
    std::size_t total = 0;
    for (const auto& d : data) {
        const std::size_t n = d.set.examples.size();
        const auto copies = static_cast<std::size_t>(std::floor(d.weight));
        total += copies * n +
                 static_cast<std::size_t>(std::llround((d.weight - static_cast<double>(copies)) * static_cast<double>(n)));
    }
    return total;
}

ordered_json lineage(const StageConfig& cfg)
{
    ordered_json data = ordered_json::array();
    for (const auto& d : cfg.datasets) {
        ordered_json entry = {{"claims", d.claims},
                              {"claims_sha256", sha256_file(d.claims)},
                              {"corpus_sha256", sha256_file(d.corpus)},
                              {"weight", d.weight}};
        if (!d.negatives.empty()) {
            entry["negatives_sha256"] = sha256_file(d.negatives);
        }
        data.push_back(entry);
    }
    return data;
}

void save_outputs(const StageConfig& cfg, const StageResult& result, const VerifierModel& layout_model,
                  const std::vector<ordered_json>& log_lines)
{
    if (cfg.checkpoint_out.empty()) {
        return;
    }
    save_checkpoint(result.checkpoint, layout_model.parameters(), cfg.checkpoint_out);
    write_file(cfg.checkpoint_out + ".config", format_stage_config(cfg));
    std::string log;
    for (const auto& l : log_lines) {
        log += l.dump() + "\n";
    }
    write_file(cfg.log.empty() ? cfg.checkpoint_out + ".log.jsonl" : cfg.log, log);
}

}  // namespace

ordered_json training_lineage(const Checkpoint& ckpt)
{
    ordered_json out = ordered_json::array();
    if (const auto it = ckpt.meta.find("ancestry"); it != ckpt.meta.end() && it->is_array()) {
        out = *it;
    }
    if (const auto it = ckpt.meta.find("datasets"); it != ckpt.meta.end() && it->is_array()) {
        for (const auto& d : *it) {
            out.push_back(d);
        }
    }
    return out;
}

void audit_unseen(const Checkpoint& ckpt, const std::vector<std::string>& paths)
{
    std::map<std::string, std::string> digests;
    for (const auto& p : paths) {
        digests.emplace(sha256_file(p), p);
    }
    for (const auto& d : training_lineage(ckpt)) {
        for (const char* key : {"claims_sha256", "negatives_sha256"}) {
            if (const auto it = d.find(key); it != d.end()) {
                if (const auto hit = digests.find(it->get<std::string>()); hit != digests.end()) {
                    throw ValidationError("checkpoint was trained on " + hit->second + " (recorded as " +
                                          d.value("claims", std::string("?")) + ")");
                }
            }
        }
    }
}

StageResult run_stage(const StageConfig& cfg, const TrainingHooks& hooks)
{
    cfg.validate();

    // model and optimizer
    std::optional<VerifierModel> model_holder;
    std::optional<AdamState> resumed;
    ordered_json ancestry = ordered_json::array();
    if (!cfg.checkpoint_in.empty()) {
        auto ckpt = load_checkpoint(cfg.checkpoint_in);
        ancestry = training_lineage(ckpt);
        model_holder.emplace(model_from_checkpoint(ckpt));
        if (cfg.resume_optimizer) {
            if (!ckpt.optimizer) {
                throw ValidationError(cfg.checkpoint_in + ": no optimizer state to resume");
            }
            resumed = std::move(ckpt.optimizer);
        }
    } else {
        model_holder.emplace(cfg.model);
    }
    VerifierModel& model = *model_holder;
    const std::size_t n_params = model.parameters().size();
    const auto head = model.rationale_head_range();
    GroupedAdam adam = resumed ? GroupedAdam(std::move(*resumed), head) : GroupedAdam(n_params, head);

    // data
    std::vector<LoadedDataset> data;
    StageResult result;
    for (const auto& spec : cfg.datasets) {
        const auto corpus = load_corpus(spec.corpus);
        auto claims = filter_provenance(load_claims(spec.claims, corpus), cfg.provenance);
        if (cfg.few_shot) {
            claims = sample_few_shot(claims, *cfg.few_shot, cfg.few_shot_seed);
        }
        std::map<int, std::vector<int>> negatives;
        if (!spec.negatives.empty()) {
            negatives = load_negatives(spec.negatives);
        }
        LoadedDataset d;
        d.set = build_examples(model, claims, corpus, negatives);
        d.weight = spec.weight;
        result.skipped_examples += d.set.skipped;
        data.push_back(std::move(d));
    }
    std::optional<DevSet> dev;
    if (cfg.dev) {
        DevSet ds;
        ds.corpus = load_corpus(cfg.dev->corpus);
        ds.claims = load_claims(cfg.dev->claims, ds.corpus);
        dev = std::move(ds);
    }
    const std::size_t per_epoch = epoch_size(data);
    if (per_epoch == 0) {
        throw ValidationError("training data is empty after filtering");
    }
    const auto batch = static_cast<std::size_t>(cfg.batch_size);
    const auto steps_per_epoch = static_cast<std::int64_t>((per_epoch + batch - 1) / batch);
    const std::int64_t total_steps = steps_per_epoch * cfg.epochs + adam.state().step;

    std::vector<ordered_json> log_lines;
    std::optional<std::ofstream> probe;
    if (!cfg.probe_log.empty()) {
        probe.emplace(open_output(cfg.probe_log));
    }

    const LossConfig loss_cfg{cfg.lambda_rationale};
    auto params = model.parameters().values();
    std::vector<std::vector<double>> grads(batch, std::vector<double>(n_params));
    std::vector<double> losses(batch);
    std::vector<double> grad(n_params);
    std::vector<double> before(n_params);

    auto snapshot = [&](int epoch) {
        Checkpoint c = make_checkpoint(model, loss_cfg, adam.state());
        c.meta = {{"stage", cfg.name},
                  {"epoch", epoch},
                  {"seed", cfg.seed},
                  {"datasets", lineage(cfg)},
                  {"ancestry", ancestry}};
        return c;
    };

    result.checkpoint = snapshot(0);
    int since_best = 0;
    bool have_best = false;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto order = epoch_order(data, cfg.seed, epoch);
        EpochReport report;
        report.epoch = epoch;
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t count = std::min(batch, order.size() - start);
            const auto n = static_cast<std::ptrdiff_t>(count);
#pragma omp parallel for schedule(dynamic)
            for (std::ptrdiff_t b = 0; b < n; ++b) {
                const auto [d, i] = order[start + static_cast<std::size_t>(b)];
                const auto& ex = data[d].set.examples[i];
                auto& g = grads[static_cast<std::size_t>(b)];
                std::fill(g.begin(), g.end(), 0.0);
                losses[static_cast<std::size_t>(b)] =
                    model.loss_and_gradient(ex.input, ex.label, ex.targets, cfg.lambda_rationale, g);
            }
            // fixed-order reduction keeps results independent of thread count
            std::fill(grad.begin(), grad.end(), 0.0);
            double batch_loss = 0.0;
            std::size_t bearing = 0;
            for (std::size_t b = 0; b < count; ++b) {
                const auto& g = grads[b];
                for (std::size_t p = 0; p < n_params; ++p) {
                    grad[p] += g[p];
                }
                batch_loss += losses[b];
                const auto [d, i] = order[start + b];
                if (data[d].set.examples[i].targets) {
                    ++bearing;
                }
            }
            if (!std::isfinite(batch_loss)) {
                // parameters are untouched by this batch, so they are the last good ones
                result.checkpoint = snapshot(epoch);
                result.checkpoint.meta["diverged"] = true;
                save_outputs(cfg, result, model, log_lines);
                throw TrainingDiverged("non-finite loss at epoch " + std::to_string(epoch) + ", step " +
                                       std::to_string(adam.state().step + 1) + "; last good parameters saved");
            }
            const double scale = 1.0 / static_cast<double>(count);
            for (auto& g : grad) {
                g *= scale;
            }
            std::copy(params.begin(), params.end(), before.begin());
            const double lr = scheduled_lr(cfg.learning_rate, adam.state().step + 1, total_steps, cfg.warmup_fraction);
            adam.step(params, grad, lr, bearing > 0 && cfg.lambda_rationale > 0.0);

            loss_sum += batch_loss;
            report.examples += count;
            ++report.steps;
            if (hooks.on_batch || probe) {
                BatchReport br;
                br.epoch = epoch;
                br.step = adam.state().step;
                br.examples = count;
                br.rationale_examples = bearing;
                br.loss = batch_loss * scale;
                for (std::size_t p = 0; p < n_params; ++p) {
                    const double delta = std::abs(params[p] - before[p]);
                    (p >= head.first && p < head.second ? br.rationale_head_delta : br.body_delta) += delta;
                }
                if (hooks.on_batch) {
                    hooks.on_batch(br);
                }
                if (probe) {
                    *probe << ordered_json{{"epoch", br.epoch},
                                           {"step", br.step},
                                           {"examples", br.examples},
                                           {"rationale_examples", br.rationale_examples},
                                           {"rationale_head_delta", br.rationale_head_delta},
                                           {"body_delta", br.body_delta}}
                                  .dump()
                           << '\n';
                }
            }
        }
        report.mean_loss = loss_sum / static_cast<double>(report.examples);

        double score = 0.0;
        if (dev) {
            const auto preds =
                predict_claims(model, dev->claims, dev->corpus, oracle_candidate_map(dev->claims), cfg.threshold);
            report.dev = evaluate_all(preds, dev->claims);
            score = label_rationale_f1(report.dev);
        }
        report.improved = !have_best || (dev && score > result.best_dev_f1) || !dev;
        if (report.improved) {
            have_best = true;
            since_best = 0;
            result.best_epoch = epoch;
            result.best_dev_f1 = score;
            result.best_dev = report.dev;
            result.checkpoint = snapshot(epoch);
            result.checkpoint.meta["best_dev_label_rationale_f1"] = score;
        } else {
            ++since_best;
        }
        ordered_json line = {{"epoch", epoch},
                             {"steps", report.steps},
                             {"examples", report.examples},
                             {"mean_loss", report.mean_loss},
                             {"improved", report.improved}};
        if (dev) {
            line["dev"] = metrics_json(report.dev);
        }
        log_lines.push_back(line);
        if (hooks.on_epoch) {
            hooks.on_epoch(report);
        }
        result.epochs.push_back(std::move(report));
        if (dev && since_best >= cfg.patience) {
            break;
        }
    }
    save_outputs(cfg, result, model, log_lines);
    return result;
}

LambdaReport tune_lambda(std::vector<double> grid, const StageConfig& base)
{
    if (grid.empty()) {
        throw ValidationError("lambda grid is empty");
    }
    if (!base.dev) {
        throw ValidationError("lambda tuning needs a dev set");
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    LambdaReport report;
    std::optional<StageResult> best;
    for (double lambda : grid) {
        StageConfig cfg = base;
        cfg.lambda_rationale = lambda;
        cfg.checkpoint_out.clear();
        cfg.probe_log.clear();
        auto result = run_stage(cfg);
        report.scores.emplace_back(lambda, result.best_dev_f1);
        if (!best || result.best_dev_f1 > best->best_dev_f1) {
            best = std::move(result);
            report.best_lambda = lambda;
        }
    }
    if (!base.checkpoint_out.empty()) {
        StageConfig cfg = base;
        cfg.lambda_rationale = report.best_lambda;
        save_checkpoint(best->checkpoint, model_from_checkpoint(best->checkpoint).parameters(), cfg.checkpoint_out);
        write_file(cfg.checkpoint_out + ".config", format_stage_config(cfg));
    }
    return report;
}

}  // namespace claimcheck
