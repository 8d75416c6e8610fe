#include "mhpsc/config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>

#include "json.hpp"

namespace mhpsc::config {
namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& msg) { throw ConfigError("config error: " + msg); }

std::string join(const char* path, const std::string& key) {
    return path[0] ? std::string(path) + "." + key : key;
}

void check_keys(const json& obj, const char* path, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) bad(std::string(path[0] ? path : "<root>") + " must be an object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed)
            if (it.key() == a) {
                ok = true;
                break;
            }
        if (!ok) bad("unknown key: " + join(path, it.key()));
    }
}

double want_number(const json& j, const std::string& key) {
    if (!j.is_number()) bad("key " + key + " must be a number");
    return j.get<double>();
}

int want_int(const json& j, const std::string& key) {
    if (!j.is_number_integer()) bad("key " + key + " must be an integer");
    return j.get<int>();
}

uint64_t want_u64(const json& j, const std::string& key) {
    if (!j.is_number_integer() || j.get<int64_t>() < 0) bad("key " + key + " must be a non-negative integer");
    return j.get<uint64_t>();
}

bool want_bool(const json& j, const std::string& key) {
    if (!j.is_boolean()) bad("key " + key + " must be a boolean");
    return j.get<bool>();
}

std::string want_str(const json& j, const std::string& key) {
    if (!j.is_string()) bad("key " + key + " must be a string");
    return j.get<std::string>();
}

// Applies one dotted-path override onto the document; the value text is
// parsed as JSON when possible, else taken as a raw string.
void apply_override(json& doc, const std::string& text) {
    auto eq = text.find('=');
    if (eq == std::string::npos || eq == 0) bad("override must look like key=value: " + text);
    std::string key = text.substr(0, eq), value = text.substr(eq + 1);
    json v = json::parse(value, nullptr, false);
    if (v.is_discarded()) v = value;
    json* node = &doc;
    size_t pos = 0;
    while (true) {
        auto dot = key.find('.', pos);
        std::string comp = key.substr(pos, dot == std::string::npos ? dot : dot - pos);
        if (comp.empty()) bad("override has an empty path component: " + text);
        if (dot == std::string::npos) {
            (*node)[comp] = std::move(v);
            return;
        }
        if (!node->contains(comp) || !(*node)[comp].is_object()) (*node)[comp] = json::object();
        node = &(*node)[comp];
        pos = dot + 1;
    }
}

Config extract(const json& doc) {
    check_keys(doc, "",
               {"schema_version", "image", "input", "corpus", "output_csv", "hops", "snr_db",
                "noiseless", "awgn", "seed", "schedule", "payload_only_cbr", "codec", "residual",
                "experiment", "train"});
    Config c;
    if (doc.contains("schema_version") && want_int(doc["schema_version"], "schema_version") != 1)
        bad("unsupported schema_version (this build reads version 1)");
    if (doc.contains("image")) {
        const json& im = doc["image"];
        check_keys(im, "image", {"height", "width"});
        if (im.contains("height")) c.image_height = want_int(im["height"], "image.height");
        if (im.contains("width")) c.image_width = want_int(im["width"], "image.width");
    }
    if (doc.contains("input")) c.input = want_str(doc["input"], "input");
    if (doc.contains("corpus")) {
        const json& co = doc["corpus"];
        check_keys(co, "corpus", {"seed", "count"});
        if (co.contains("seed")) c.corpus_seed = want_u64(co["seed"], "corpus.seed");
        if (co.contains("count")) c.corpus_count = want_int(co["count"], "corpus.count");
    }
    if (doc.contains("output_csv")) c.output_csv = want_str(doc["output_csv"], "output_csv");
    if (doc.contains("hops")) c.hops = want_int(doc["hops"], "hops");
    if (doc.contains("snr_db")) c.snr_db = want_number(doc["snr_db"], "snr_db");
    if (doc.contains("noiseless")) c.noiseless = want_bool(doc["noiseless"], "noiseless");
    if (doc.contains("awgn")) c.awgn = want_bool(doc["awgn"], "awgn");
    if (doc.contains("seed")) c.seed = want_u64(doc["seed"], "seed");
    if (doc.contains("schedule")) {
        const json& s = doc["schedule"];
        if (s.is_string()) {
            c.schedule_mode = s.get<std::string>();
            if (c.schedule_mode != "all" && c.schedule_mode != "none")
                bad("key schedule must be \"all\", \"none\", or an array of hop indices");
        } else if (s.is_array()) {
            c.schedule_mode = "list";
            for (const auto& e : s) c.schedule.push_back(want_int(e, "schedule[]"));
        } else {
            bad("key schedule must be \"all\", \"none\", or an array of hop indices");
        }
    }
    if (doc.contains("payload_only_cbr"))
        c.payload_only_cbr = want_bool(doc["payload_only_cbr"], "payload_only_cbr");
    if (doc.contains("codec")) {
        const json& cd = doc["codec"];
        check_keys(cd, "codec", {"kind", "l", "block", "weights", "seed"});
        if (cd.contains("kind")) c.codec_kind = want_str(cd["kind"], "codec.kind");
        if (c.codec_kind != "block_dct" && c.codec_kind != "trainable_linear")
            bad("codec.kind must be block_dct or trainable_linear");
        if (cd.contains("l")) c.codec_l = want_int(cd["l"], "codec.l");
        if (cd.contains("block")) c.codec_block = want_int(cd["block"], "codec.block");
        if (cd.contains("weights")) c.codec_weights = want_str(cd["weights"], "codec.weights");
        if (cd.contains("seed")) c.codec_seed = want_u64(cd["seed"], "codec.seed");
    }
    if (doc.contains("residual")) {
        const json& r = doc["residual"];
        check_keys(r, "residual",
                   {"enabled", "snr_db", "noiseless", "awgn", "ldpc", "qam_order", "compressor",
                    "estimator"});
        if (r.contains("enabled")) c.residual_enabled = want_bool(r["enabled"], "residual.enabled");
        if (r.contains("snr_db")) {
            c.residual_has_snr = true;
            c.residual_snr_db = want_number(r["snr_db"], "residual.snr_db");
        }
        if (r.contains("noiseless"))
            c.residual_noiseless = want_bool(r["noiseless"], "residual.noiseless");
        if (r.contains("awgn")) c.residual_awgn = want_bool(r["awgn"], "residual.awgn");
        if (r.contains("ldpc")) c.ldpc_path = want_str(r["ldpc"], "residual.ldpc");
        if (r.contains("qam_order")) c.qam_order = want_int(r["qam_order"], "residual.qam_order");
        if (r.contains("compressor")) {
            const json& k = r["compressor"];
            check_keys(k, "residual.compressor", {"block", "q", "range", "weights"});
            if (k.contains("block")) c.comp_block = want_int(k["block"], "residual.compressor.block");
            if (k.contains("q")) c.comp_q = want_int(k["q"], "residual.compressor.q");
            if (k.contains("range"))
                c.comp_range = want_number(k["range"], "residual.compressor.range");
            if (k.contains("weights"))
                c.comp_weights = want_str(k["weights"], "residual.compressor.weights");
        }
        if (r.contains("estimator")) {
            const json& k = r["estimator"];
            check_keys(k, "residual.estimator", {"k", "weights"});
            if (k.contains("k")) c.est_k = want_int(k["k"], "residual.estimator.k");
            if (k.contains("weights"))
                c.est_weights = want_str(k["weights"], "residual.estimator.weights");
        }
    }
    if (doc.contains("experiment")) {
        const json& e = doc["experiment"];
        check_keys(e, "experiment", {"kind", "grid", "trials", "id", "jobs"});
        if (e.contains("kind")) c.exp_kind = want_str(e["kind"], "experiment.kind");
        if (c.exp_kind != "single" && c.exp_kind != "snr" && c.exp_kind != "cbr" &&
            c.exp_kind != "hops")
            bad("experiment.kind must be single, snr, cbr, or hops");
        if (e.contains("grid")) {
            if (!e["grid"].is_array()) bad("key experiment.grid must be an array of numbers");
            for (const auto& g : e["grid"]) c.grid.push_back(want_number(g, "experiment.grid[]"));
        }
        if (e.contains("trials")) c.trials = want_int(e["trials"], "experiment.trials");
        if (e.contains("id")) c.exp_id = want_str(e["id"], "experiment.id");
        if (e.contains("jobs")) c.jobs = want_int(e["jobs"], "experiment.jobs");
    }
    if (doc.contains("train")) {
        const json& t = doc["train"];
        check_keys(t, "train",
                   {"dataset", "corpus_count", "out_dir", "steps", "lr", "hops", "gamma",
                    "realizations", "snr_db", "noiseless", "awgn", "seed"});
        if (t.contains("dataset")) c.train_dataset = want_str(t["dataset"], "train.dataset");
        if (t.contains("corpus_count"))
            c.train_corpus_count = want_int(t["corpus_count"], "train.corpus_count");
        if (t.contains("out_dir")) c.train_out = want_str(t["out_dir"], "train.out_dir");
        if (t.contains("steps")) c.train_steps = want_int(t["steps"], "train.steps");
        if (t.contains("lr")) c.train_lr = want_number(t["lr"], "train.lr");
        if (t.contains("hops")) c.train_hops = want_int(t["hops"], "train.hops");
        if (t.contains("gamma")) c.train_gamma = want_number(t["gamma"], "train.gamma");
        if (t.contains("realizations"))
            c.train_realizations = want_int(t["realizations"], "train.realizations");
        if (t.contains("snr_db")) c.train_snr_db = want_number(t["snr_db"], "train.snr_db");
        if (t.contains("noiseless")) c.train_noiseless = want_bool(t["noiseless"], "train.noiseless");
        if (t.contains("awgn")) c.train_awgn = want_bool(t["awgn"], "train.awgn");
        if (t.contains("seed")) c.train_seed = want_u64(t["seed"], "train.seed");
    }
    return c;
}

Config from_document(json doc, const std::vector<std::string>& overrides) {
    for (const auto& o : overrides) apply_override(doc, o);
    return extract(doc);
}

}  // namespace

Config parse_config(const std::string& json_text, const std::vector<std::string>& overrides) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        bad(std::string("cannot parse JSON: ") + e.what());
    }
    return from_document(std::move(doc), overrides);
}

Config load_config(const std::string& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path, std::ios::binary);
    if (!in) bad("cannot open config file " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        bad(path + ": " + e.what());
    }
    return from_document(std::move(doc), overrides);
}

std::string resolve_config_path(const std::string& arg) {
    const char* env = std::getenv("MHPSC_CONFIG_DIR");
    std::string dir = env ? env : "data/config";
    if (arg.empty()) return (std::filesystem::path(dir) / "base.json").string();
    if (std::filesystem::exists(arg)) return arg;
    auto alt = std::filesystem::path(dir) / arg;
    if (std::filesystem::exists(alt)) return alt.string();
    return arg;
}

}  // namespace mhpsc::config
