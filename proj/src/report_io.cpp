#include <filesystem>
#include <initializer_list>
#include <string>
#include <vector>

#include <json.hpp>

#include "papi/harness.hpp"
#include "papi/serialize.hpp"

namespace papi {

namespace {

using nlohmann::json;

const char* act_name(Activation a) {
    switch (a) {
        case Activation::relu: return "relu";
        case Activation::tanh: return "tanh";
        case Activation::identity: return "identity";
    }
    return "?";
}

Activation parse_act(const std::string& s) {
    if (s == "relu") return Activation::relu;
    if (s == "tanh") return Activation::tanh;
    if (s == "identity") return Activation::identity;
    throw ConfigError("unknown activation: " + s);
}

const char* mode_name(LrSchedule::Mode m) {
    return m == LrSchedule::Mode::constant ? "constant" : "inverse_t";
}

LrSchedule::Mode parse_mode(const std::string& s) {
    if (s == "constant") return LrSchedule::Mode::constant;
    if (s == "inverse_t") return LrSchedule::Mode::inverse_t;
    throw ConfigError("unknown schedule mode: " + s);
}

void expect_object(const json& j, const std::string& ctx) {
    if (!j.is_object()) throw ConfigError(ctx + " must be a JSON object");
}

void expect_keys(const json& j, const std::string& ctx,
                 std::initializer_list<const char*> allowed) {
    expect_object(j, ctx);
    for (const auto& item : j.items()) {
        bool known = false;
        for (const char* k : allowed)
            if (item.key() == k) {
                known = true;
                break;
            }
        if (!known) throw ConfigError("unknown config key: " + ctx + "." + item.key());
    }
}

int get_int(const json& j, const std::string& ctx, const char* key, int fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_number_integer() && !v.is_number_unsigned())
        throw ConfigError("config field " + ctx + "." + key + " must be an integer");
    return v.get<int>();
}

std::int64_t get_i64(const json& j, const std::string& ctx, const char* key,
                     std::int64_t fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_number_integer() && !v.is_number_unsigned())
        throw ConfigError("config field " + ctx + "." + key + " must be an integer");
    return v.get<std::int64_t>();
}

double get_num(const json& j, const std::string& ctx, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_number()) throw ConfigError("config field " + ctx + "." + key + " must be a number");
    return v.get<double>();
}

bool get_bool(const json& j, const std::string& ctx, const char* key, bool fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_boolean()) throw ConfigError("config field " + ctx + "." + key + " must be a boolean");
    return v.get<bool>();
}

std::string get_str(const json& j, const std::string& ctx, const char* key,
                    const std::string& fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_string()) throw ConfigError("config field " + ctx + "." + key + " must be a string");
    return v.get<std::string>();
}

json config_json(const RunConfig& c) {
    json j;
    j["method"] = method_name(c.method);
    j["seed"] = c.seed;
    j["K"] = c.K;
    j["epochs_per_task"] = c.epochs_per_task;
    j["batch_size"] = c.batch_size;
    j["lambda"] = c.lambda;
    j["fisher_samples"] = c.fisher_samples;
    j["pathway_reg_weight"] = c.pathway_reg_weight;
    j["papi_use_ewc"] = c.papi_use_ewc;
    j["agem_memory"] = c.agem_memory;
    j["baseline_inits"] = c.baseline_inits;
    if (c.energy_budget.has_value())
        j["energy_budget"] = *c.energy_budget;
    else
        j["energy_budget"] = nullptr;
    j["stream"] = json{{"kind", task_kind_name(c.stream.kind)},
                       {"n_tasks", c.stream.n_tasks},
                       {"ordering", ordering_name(c.stream.ordering)},
                       {"input_dim", c.stream.knobs.input_dim},
                       {"n_classes", c.stream.knobs.n_classes},
                       {"angle_gap_deg", c.stream.knobs.angle_gap_deg},
                       {"class_radius", c.stream.knobs.class_radius},
                       {"noise_sigma", c.stream.knobs.noise_sigma},
                       {"train_samples", c.stream.train_samples},
                       {"eval_samples", c.stream.eval_samples}};
    j["layout"] = json{{"encoder_widths", c.layout.encoder_widths},
                       {"head_hidden", c.layout.head_hidden},
                       {"activation", act_name(c.layout.act)}};
    j["schedule"] = json{{"eta0", c.schedule.eta0},
                         {"mode", mode_name(c.schedule.mode)},
                         {"beta", c.schedule.beta}};
    j["router"] = json{{"embed_dim", c.router.embed_dim},
                       {"hidden", c.router.hidden},
                       {"samples_per_task", c.router.samples_per_task},
                       {"eta0", c.router.eta0},
                       {"steps", c.router.steps},
                       {"batch", c.router.batch}};
    j["cost_model"] = json{{"joules_per_flop", c.cost_model.joules_per_flop},
                           {"joules_per_param_access", c.cost_model.joules_per_param_access},
                           {"joules_per_routing_msg", c.cost_model.joules_per_routing_msg}};
    return j;
}

RunConfig config_from_json(const json& j) {
    expect_keys(j, "config",
                {"method", "seed", "K", "epochs_per_task", "batch_size", "lambda",
                 "fisher_samples", "pathway_reg_weight", "papi_use_ewc", "agem_memory",
                 "baseline_inits", "energy_budget", "stream", "layout", "schedule", "router",
                 "cost_model"});
    if (!j.contains("method")) throw ConfigError("config field method is required");
    if (!j.contains("seed")) throw ConfigError("config field seed is required");
    RunConfig c;
    c.method = parse_method(get_str(j, "config", "method", ""));
    {
        const json& v = j.at("seed");
        const bool ok = v.is_number_unsigned() ||
                        (v.is_number_integer() && v.get<std::int64_t>() >= 0);
        if (!ok) throw ConfigError("config field config.seed must be a nonnegative integer");
        c.seed = v.get<std::uint64_t>();
    }
    c.K = get_int(j, "config", "K", c.K);
    c.epochs_per_task = get_int(j, "config", "epochs_per_task", c.epochs_per_task);
    c.batch_size = get_int(j, "config", "batch_size", c.batch_size);
    c.lambda = get_num(j, "config", "lambda", c.lambda);
    c.fisher_samples = get_i64(j, "config", "fisher_samples", c.fisher_samples);
    c.pathway_reg_weight = get_num(j, "config", "pathway_reg_weight", c.pathway_reg_weight);
    c.papi_use_ewc = get_bool(j, "config", "papi_use_ewc", c.papi_use_ewc);
    c.agem_memory = get_int(j, "config", "agem_memory", c.agem_memory);
    c.baseline_inits = get_int(j, "config", "baseline_inits", c.baseline_inits);
    if (j.contains("energy_budget") && !j.at("energy_budget").is_null()) {
        const json& v = j.at("energy_budget");
        if (!v.is_number()) throw ConfigError("config field config.energy_budget must be a number");
        c.energy_budget = v.get<double>();
    }
    if (j.contains("stream")) {
        const json& s = j.at("stream");
        expect_keys(s, "stream",
                    {"kind", "n_tasks", "ordering", "input_dim", "n_classes", "angle_gap_deg",
                     "class_radius", "noise_sigma", "train_samples", "eval_samples"});
        c.stream.kind = parse_task_kind(get_str(s, "stream", "kind", task_kind_name(c.stream.kind)));
        c.stream.n_tasks = get_int(s, "stream", "n_tasks", c.stream.n_tasks);
        c.stream.ordering =
            parse_ordering(get_str(s, "stream", "ordering", ordering_name(c.stream.ordering)));
        c.stream.knobs.input_dim = get_int(s, "stream", "input_dim", c.stream.knobs.input_dim);
        c.stream.knobs.n_classes = get_int(s, "stream", "n_classes", c.stream.knobs.n_classes);
        c.stream.knobs.angle_gap_deg =
            get_num(s, "stream", "angle_gap_deg", c.stream.knobs.angle_gap_deg);
        c.stream.knobs.class_radius =
            get_num(s, "stream", "class_radius", c.stream.knobs.class_radius);
        c.stream.knobs.noise_sigma =
            get_num(s, "stream", "noise_sigma", c.stream.knobs.noise_sigma);
        c.stream.train_samples = get_int(s, "stream", "train_samples", c.stream.train_samples);
        c.stream.eval_samples = get_int(s, "stream", "eval_samples", c.stream.eval_samples);
    }
    // default encoder: identity at the stream's input width
    c.layout.encoder_widths = {c.stream.knobs.input_dim};
    if (j.contains("layout")) {
        const json& l = j.at("layout");
        expect_keys(l, "layout", {"encoder_widths", "head_hidden", "activation"});
        if (l.contains("encoder_widths")) {
            const json& w = l.at("encoder_widths");
            if (!w.is_array() || w.empty())
                throw ConfigError("config field layout.encoder_widths must be a nonempty array");
            c.layout.encoder_widths.clear();
            for (const json& v : w) {
                if (!v.is_number_integer() && !v.is_number_unsigned())
                    throw ConfigError("config field layout.encoder_widths must hold integers");
                c.layout.encoder_widths.push_back(v.get<int>());
            }
        }
        c.layout.head_hidden = get_int(l, "layout", "head_hidden", c.layout.head_hidden);
        c.layout.act = parse_act(get_str(l, "layout", "activation", act_name(c.layout.act)));
    }
    if (j.contains("schedule")) {
        const json& s = j.at("schedule");
        expect_keys(s, "schedule", {"eta0", "mode", "beta"});
        c.schedule.eta0 = get_num(s, "schedule", "eta0", c.schedule.eta0);
        c.schedule.mode = parse_mode(get_str(s, "schedule", "mode", mode_name(c.schedule.mode)));
        c.schedule.beta = get_num(s, "schedule", "beta", c.schedule.beta);
    }
    if (j.contains("router")) {
        const json& r = j.at("router");
        expect_keys(r, "router",
                    {"embed_dim", "hidden", "samples_per_task", "eta0", "steps", "batch"});
        c.router.embed_dim = get_int(r, "router", "embed_dim", c.router.embed_dim);
        c.router.hidden = get_int(r, "router", "hidden", c.router.hidden);
        c.router.samples_per_task =
            get_int(r, "router", "samples_per_task", c.router.samples_per_task);
        c.router.eta0 = get_num(r, "router", "eta0", c.router.eta0);
        c.router.steps = get_int(r, "router", "steps", c.router.steps);
        c.router.batch = get_int(r, "router", "batch", c.router.batch);
    }
    if (j.contains("cost_model")) {
        const json& m = j.at("cost_model");
        expect_keys(m, "cost_model",
                    {"joules_per_flop", "joules_per_param_access", "joules_per_routing_msg"});
        c.cost_model.joules_per_flop =
            get_num(m, "cost_model", "joules_per_flop", c.cost_model.joules_per_flop);
        c.cost_model.joules_per_param_access = get_num(
            m, "cost_model", "joules_per_param_access", c.cost_model.joules_per_param_access);
        c.cost_model.joules_per_routing_msg = get_num(
            m, "cost_model", "joules_per_routing_msg", c.cost_model.joules_per_routing_msg);
    }
    return c;
}

json parse_json_text(const std::string& text, const char* what) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw IoError(std::string("malformed JSON in ") + what);
    return j;
}

std::string quote_csv(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += "\"\"";
        out += ch;
    }
    out += '"';
    return out;
}

}  // namespace

RunConfig config_from_json_text(const std::string& text) {
    return config_from_json(parse_json_text(text, "run config"));
}

std::string config_to_json_text(const RunConfig& config) {
    return config_json(config).dump(2) + "\n";
}

std::uint64_t config_hash(const RunConfig& config) {
    const std::string text = config_to_json_text(config);
    return fnv1a64(text.data(), text.size());
}

std::string config_hash_hex(const RunConfig& config) {
    std::uint64_t h = config_hash(config);
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = "0123456789abcdef"[h & 0xf];
        h >>= 4;
    }
    return out;
}

std::string report_to_json_text(const RunReport& report) {
    json j;
    j["format"] = "papi-report";
    j["version"] = 1;
    j["config"] = config_json(report.config);
    json rows = json::array();
    for (const MetricRow& r : report.metrics.rows)
        rows.push_back(json::array({r.i, r.t, r.metric, r.value}));
    j["metrics"] = json{{"run", report.metrics.run},
                        {"method", report.metrics.method},
                        {"rows", std::move(rows)}};
    json ledger;
    for (Phase p : {Phase::train, Phase::inference, Phase::routing}) {
        json counts;
        for (Counter c : {Counter::flops, Counter::param_accesses, Counter::messages})
            counts[counter_name(c)] = report.ledger.get(p, c);
        ledger[phase_name(p)] = std::move(counts);
    }
    j["ledger"] = std::move(ledger);
    json routing = json::array();
    for (const RoutingStat& s : report.routing)
        routing.push_back(json{{"t", s.t},
                               {"task", s.task},
                               {"counts", s.count_per_k},
                               {"correct", s.correct},
                               {"total", s.total}});
    j["routing"] = std::move(routing);
    j["budget"] = json{{"checked", report.budget.checked},
                       {"ok", report.budget.ok},
                       {"margin", report.budget.margin}};
    json snaps = json::array();
    for (const TaskSnapshot& s : report.snapshots)
        snaps.push_back(json{{"task", s.task}, {"theta", s.theta}, {"usage", s.usage}});
    j["snapshots"] = std::move(snaps);
    j["final_theta"] = report.final_theta;
    return j.dump(2) + "\n";
}

RunReport report_from_json_text(const std::string& text) {
    const json j = parse_json_text(text, "run report");
    if (!j.is_object() || j.value("format", "") != "papi-report")
        throw IoError("not a run report file");
    if (j.value("version", 0) != 1) throw IoError("unsupported run report version");
    RunReport r;
    r.config = config_from_json(j.at("config"));
    const json& m = j.at("metrics");
    r.metrics.run = m.at("run").get<std::string>();
    r.metrics.method = m.at("method").get<std::string>();
    for (const json& row : m.at("rows")) {
        if (!row.is_array() || row.size() != 4) throw IoError("malformed metric row");
        r.metrics.rows.push_back(MetricRow{row[0].get<int>(), row[1].get<int>(),
                                           row[2].get<std::string>(), row[3].get<double>()});
    }
    const json& ledger = j.at("ledger");
    for (Phase p : {Phase::train, Phase::inference, Phase::routing}) {
        const json& counts = ledger.at(phase_name(p));
        for (Counter c : {Counter::flops, Counter::param_accesses, Counter::messages})
            r.ledger.add(p, c, counts.at(counter_name(c)).get<std::uint64_t>());
    }
    for (const json& s : j.at("routing")) {
        RoutingStat st;
        st.t = s.at("t").get<int>();
        st.task = s.at("task").get<int>();
        st.count_per_k = s.at("counts").get<std::vector<std::int64_t>>();
        st.correct = s.at("correct").get<std::int64_t>();
        st.total = s.at("total").get<std::int64_t>();
        r.routing.push_back(std::move(st));
    }
    const json& b = j.at("budget");
    r.budget.checked = b.at("checked").get<bool>();
    r.budget.ok = b.at("ok").get<bool>();
    r.budget.margin = b.at("margin").get<double>();
    for (const json& s : j.at("snapshots")) {
        TaskSnapshot snap;
        snap.task = s.at("task").get<int>();
        snap.theta = s.at("theta").get<Vec>();
        snap.usage = s.at("usage").get<Vec>();
        r.snapshots.push_back(std::move(snap));
    }
    r.final_theta = j.at("final_theta").get<Vec>();
    return r;
}

namespace {

std::string series_csv(const RunReport& report) {
    std::string out = "t,loss_before,loss_after,plasticity,avg_stability,routing_accuracy,energy_total\n";
    if (report.metrics.rows.empty()) return out;
    const int T = report.config.stream.n_tasks;
    auto cell = [&](std::optional<double> v) {
        return v.has_value() ? format_double(*v) : std::string();
    };
    for (int t = 1; t <= T; ++t) {
        out += std::to_string(t);
        out += ',';
        out += cell(find_metric(report.metrics, t, t, "loss_before"));
        out += ',';
        out += cell(find_metric(report.metrics, t, t, "loss"));
        out += ',';
        out += cell(find_metric(report.metrics, t, t, "plasticity"));
        out += ',';
        out += cell(find_metric(report.metrics, 0, t, "avg_stability"));
        out += ',';
        out += cell(find_metric(report.metrics, 0, t, "routing_accuracy"));
        out += ',';
        out += cell(find_metric(report.metrics, 0, t, "energy_total"));
        out += '\n';
    }
    return out;
}

}  // namespace

void emit_report(const RunReport& report, const std::string& out_dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec && !fs::is_directory(out_dir))
        throw IoError("cannot create output directory: " + out_dir);
    const std::string hash = config_hash_hex(report.config);
    const fs::path dir(out_dir);
    write_text_file((dir / ("metrics_" + hash + ".csv")).string(), report.metrics.csv());
    const bool empty_ledger = report.ledger == EnergyLedger{};
    write_text_file((dir / ("ledger_" + hash + ".csv")).string(),
                    empty_ledger && report.metrics.rows.empty() ? "phase,counter,value\n"
                                                                : ledger_csv(report.ledger));
    write_text_file((dir / ("series_" + hash + ".csv")).string(), series_csv(report));
    write_text_file((dir / ("summary_" + hash + ".json")).string(),
                    report_to_json_text(report));
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::string out = "K,avg_stability,plasticity,energy_total,error\n";
    for (const SweepRow& r : rows) {
        out += std::to_string(r.K);
        out += ',';
        if (r.failed) {
            out += ",,,";
            out += quote_csv(r.error);
        } else {
            out += format_double(r.s_t);
            out += ',';
            out += format_double(r.p_t);
            out += ',';
            out += format_double(r.e_total);
            out += ',';
        }
        out += '\n';
    }
    return out;
}

std::string compare_csv(const std::vector<CompareRow>& rows) {
    std::string out = "check,method_a,method_b,value_a,value_b,observed,expected,holds\n";
    for (const CompareRow& r : rows) {
        out += r.check;
        out += ',';
        out += r.method_a;
        out += ',';
        out += r.method_b;
        out += ',';
        out += format_double(r.value_a);
        out += ',';
        out += format_double(r.value_b);
        out += ',';
        out += std::to_string(r.observed);
        out += ',';
        out += std::to_string(r.expected);
        out += ',';
        out += r.holds ? '1' : '0';
        out += '\n';
    }
    return out;
}

std::string report_summary_text(const std::string& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir);
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (entry.is_regular_file() && name.rfind("summary_", 0) == 0 &&
            name.size() > 5 && name.substr(name.size() - 5) == ".json")
            files.push_back(entry.path());
    }
    if (files.empty()) throw IoError("no summary_*.json files under " + dir);
    std::sort(files.begin(), files.end());

    std::string out;
    for (const fs::path& f : files) {
        const RunReport r = report_from_json_text(read_text_file(f.string()));
        const int T = r.config.stream.n_tasks;
        out += "run " + r.metrics.run + "  method=" + r.metrics.method +
               "  tasks=" + std::to_string(T) + "  seed=" + std::to_string(r.config.seed) + "\n";
        auto line = [&](const char* label, std::optional<double> v) {
            out += "  ";
            out += label;
            out += '=';
            out += v.has_value() ? format_double(*v) : std::string("n/a");
        };
        line("avg_stability", find_metric(r.metrics, 0, T, "avg_stability"));
        line("plasticity", find_metric(r.metrics, T, T, "plasticity"));
        line("routing_accuracy", find_metric(r.metrics, 0, T, "routing_accuracy"));
        out += '\n';
        line("energy_train", find_metric(r.metrics, 0, T, "energy_train"));
        line("energy_inference", find_metric(r.metrics, 0, T, "energy_inference"));
        line("energy_routing", find_metric(r.metrics, 0, T, "energy_routing"));
        line("energy_total", find_metric(r.metrics, 0, T, "energy_total"));
        out += '\n';
        if (r.budget.checked) {
            out += "  budget=";
            out += r.budget.ok ? "ok" : "exceeded";
            out += " margin=" + format_double(r.budget.margin) + "\n";
        }
    }
    return out;
}

}  // namespace papi
