#include "claimcheck/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "claimcheck/errors.hpp"
#include "claimcheck/io.hpp"

namespace claimcheck {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

nlohmann::ordered_json model_config_json(const ModelConfig& cfg)
{
    const auto& e = cfg.encoder;
    return {{"tokenizer", e.tokenizer},   {"vocab_size", e.vocab_size},
            {"max_length", e.max_length}, {"window", e.window},
            {"hidden", e.hidden},         {"layers", e.layers},
            {"ffn", e.ffn},               {"relative_radius", e.relative_radius},
            {"head_hidden", cfg.head_hidden}, {"seed", cfg.seed}};
}

ModelConfig model_config_from_json(const nlohmann::ordered_json& j)
{
    ModelConfig cfg;
    auto& e = cfg.encoder;
    e.tokenizer = j.at("tokenizer").get<std::string>();
    e.vocab_size = j.at("vocab_size").get<int>();
    e.max_length = j.at("max_length").get<int>();
    e.window = j.at("window").get<int>();
    e.hidden = j.at("hidden").get<int>();
    e.layers = j.at("layers").get<int>();
    e.ffn = j.at("ffn").get<int>();
    e.relative_radius = j.at("relative_radius").get<int>();
    cfg.head_hidden = j.at("head_hidden").get<int>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.validate();
    return cfg;
}

namespace {

void write_doubles(std::ostream& out, const std::vector<double>& xs)
{
    out.write(reinterpret_cast<const char*>(xs.data()), static_cast<std::streamsize>(xs.size() * sizeof(double)));
}

std::vector<double> read_doubles(std::istream& in, std::size_t n, const std::string& path)
{
    std::vector<double> xs(n);
    in.read(reinterpret_cast<char*>(xs.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (static_cast<std::size_t>(in.gcount()) != n * sizeof(double)) {
        throw ValidationError(path + ": checkpoint payload truncated");
    }
    return xs;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const ParameterSet& layout, const std::string& path)
{
    if (ckpt.values.size() != layout.size()) {
        throw ValidationError("checkpoint values do not match the parameter layout");
    }
    nlohmann::ordered_json header;
    header["model"] = model_config_json(ckpt.model);
    header["loss"] = {{"lambda_rationale", ckpt.loss.lambda_rationale}};
    auto& tensors = header["tensors"] = nlohmann::ordered_json::array();
    for (const auto& t : layout.tensors()) {
        tensors.push_back({{"name", t.name}, {"rows", t.rows}, {"cols", t.cols}, {"offset", t.offset}});
    }
    header["value_count"] = ckpt.values.size();
    if (ckpt.optimizer) {
        const auto& o = *ckpt.optimizer;
        if (o.m.size() != ckpt.values.size() || o.v.size() != ckpt.values.size()) {
            throw ValidationError("optimizer moments do not match the parameter count");
        }
        header["optimizer"] = {{"kind", "adam"},
                               {"step", o.step},
                               {"body_updates", o.body_updates},
                               {"rationale_updates", o.rationale_updates}};
    } else {
        header["optimizer"] = nullptr;
    }
    header["meta"] = ckpt.meta;

    auto out = open_output(path);
    out << kCheckpointMagic << " v" << kCheckpointVersion << '\n' << header.dump() << '\n';
    write_doubles(out, ckpt.values);
    if (ckpt.optimizer) {
        write_doubles(out, ckpt.optimizer->m);
        write_doubles(out, ckpt.optimizer->v);
    }
    out.flush();
    if (!out) {
        throw IoError("failed writing " + path);
    }
}

Checkpoint load_checkpoint(const std::string& path)
{
    auto in = open_input(path);
    std::string magic;
    if (!std::getline(in, magic)) {
        throw ValidationError(path + ": empty checkpoint");
    }
    const std::string expected = std::string(kCheckpointMagic) + " v" + std::to_string(kCheckpointVersion);
    if (magic != expected) {
        throw ValidationError(path + ": unsupported checkpoint header '" + magic + "' (expected '" + expected + "')");
    }
    std::string header_line;
    std::getline(in, header_line);
    Checkpoint ckpt;
    try {
        const auto header = nlohmann::ordered_json::parse(header_line);
        ckpt.model = model_config_from_json(header.at("model"));
        ckpt.loss.lambda_rationale = header.at("loss").at("lambda_rationale").get<double>();
        ckpt.meta = header.value("meta", nlohmann::ordered_json::object());
        const auto n = header.at("value_count").get<std::size_t>();

        // The tensor table must match what this build would declare for the config.
        VerifierModel probe(ckpt.model, std::vector<double>(n, 0.0));
        const auto& declared = probe.parameters().tensors();
        const auto& table = header.at("tensors");
        if (table.size() != declared.size()) {
            throw ValidationError(path + ": tensor table does not match the model config");
        }
        for (std::size_t i = 0; i < declared.size(); ++i) {
            const auto& t = table[i];
            if (t.at("name").get<std::string>() != declared[i].name ||
                t.at("rows").get<std::size_t>() != declared[i].rows ||
                t.at("cols").get<std::size_t>() != declared[i].cols ||
                t.at("offset").get<std::size_t>() != declared[i].offset) {
                throw ValidationError(path + ": tensor '" + declared[i].name + "' does not match the model config");
            }
        }
        ckpt.values = read_doubles(in, n, path);
        const auto& opt = header.at("optimizer");
        if (!opt.is_null()) {
            AdamState state;
            state.step = opt.at("step").get<std::int64_t>();
            state.body_updates = opt.at("body_updates").get<std::int64_t>();
            state.rationale_updates = opt.at("rationale_updates").get<std::int64_t>();
            state.m = read_doubles(in, n, path);
            state.v = read_doubles(in, n, path);
            ckpt.optimizer = std::move(state);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path + ": malformed checkpoint header: " + e.what());
    }
    if (in.peek() != std::char_traits<char>::eof()) {
        throw ValidationError(path + ": trailing bytes after checkpoint payload");
    }
    return ckpt;
}

Checkpoint make_checkpoint(const VerifierModel& model, const LossConfig& loss, std::optional<AdamState> optimizer)
{
    Checkpoint ckpt;
    ckpt.model = model.config();
    ckpt.loss = loss;
    const auto values = model.parameters().values();
    ckpt.values.assign(values.begin(), values.end());
    ckpt.optimizer = std::move(optimizer);
    return ckpt;
}

VerifierModel model_from_checkpoint(const Checkpoint& ckpt) { return VerifierModel(ckpt.model, ckpt.values); }

}  // namespace claimcheck
