#include "papi/serialize.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace papi {

namespace {

using nlohmann::json;

constexpr int kVersion = 1;

json envelope(const char* kind, json payload) {
    return json{{"format", "papi-snapshot"},
                {"version", kVersion},
                {"kind", kind},
                {"payload", std::move(payload)}};
}

json open_envelope(const std::string& text, const char* kind) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw IoError(std::string("snapshot parse failed: ") + e.what());
    }
    if (!j.is_object() || j.value("format", "") != "papi-snapshot")
        throw IoError("not a snapshot file");
    if (j.value("version", -1) != kVersion) throw IoError("unsupported snapshot version");
    if (j.value("kind", "") != kind)
        throw IoError(std::string("snapshot kind mismatch, wanted ") + kind);
    if (!j.contains("payload") || !j["payload"].is_object())
        throw IoError("snapshot payload missing");
    return j["payload"];
}

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
    throw IoError("unknown activation: " + s);
}

const char* head_name(Head h) { return h == Head::softmax_xent ? "softmax_xent" : "mse"; }

Head parse_head(const std::string& s) {
    if (s == "softmax_xent") return Head::softmax_xent;
    if (s == "mse") return Head::mse;
    throw IoError("unknown head: " + s);
}

json arch_to_json(const NetArch& arch) {
    return json{{"widths", arch.widths}, {"act", act_name(arch.act)}, {"head", head_name(arch.head)}};
}

NetArch arch_from_json(const json& j) {
    NetArch arch;
    arch.widths = j.at("widths").get<std::vector<int>>();
    arch.act = parse_act(j.at("act").get<std::string>());
    arch.head = parse_head(j.at("head").get<std::string>());
    return arch;
}

}  // namespace

std::string store_to_json(const PathwayLayout& layout, const ParamStore& store) {
    json heads = json::array();
    for (const auto& h : layout.heads) heads.push_back(arch_to_json(h));
    json payload{{"encoder_widths", layout.encoder_widths},
                 {"act", act_name(layout.act)},
                 {"heads", std::move(heads)},
                 {"theta", store.theta},
                 {"shared_idx", store.shared_idx},
                 {"ps_idx", store.ps_idx}};
    return envelope("param_store", std::move(payload)).dump();
}

void store_from_json(const std::string& text, PathwayLayout& layout, ParamStore& store) {
    const json p = open_envelope(text, "param_store");
    layout = PathwayLayout{};
    layout.encoder_widths = p.at("encoder_widths").get<std::vector<int>>();
    layout.act = parse_act(p.at("act").get<std::string>());
    for (const auto& h : p.at("heads")) layout.heads.push_back(arch_from_json(h));
    layout.validate();
    store = ParamStore{};
    store.theta = p.at("theta").get<Vec>();
    store.shared_idx = p.at("shared_idx").get<std::vector<int>>();
    store.ps_idx = p.at("ps_idx").get<std::vector<std::vector<int>>>();
    if (static_cast<std::int64_t>(store.theta.size()) != layout.total_params())
        throw IoError("stored theta does not match layout");
}

std::string router_to_json(const Router& router) {
    json embed = json::object();
    for (const auto& [id, tau] : router.embed) embed[std::to_string(id)] = tau;
    json payload{{"K", router.K},           {"d", router.d},
                 {"d_h", router.d_h},       {"hidden", router.hidden},
                 {"seed", router.seed},     {"meta", arch_to_json(router.meta)},
                 {"psi", router.psi},       {"embed", std::move(embed)}};
    return envelope("router", std::move(payload)).dump();
}

Router router_from_json(const std::string& text) {
    const json p = open_envelope(text, "router");
    Router r;
    r.K = p.at("K").get<int>();
    r.d = p.at("d").get<int>();
    r.d_h = p.at("d_h").get<int>();
    r.hidden = p.at("hidden").get<int>();
    r.seed = p.at("seed").get<std::uint64_t>();
    r.meta = arch_from_json(p.at("meta"));
    r.psi = p.at("psi").get<Vec>();
    for (const auto& [key, tau] : p.at("embed").items())
        r.embed[std::stoi(key)] = tau.get<Vec>();
    r.validate();
    return r;
}

std::string fisher_to_json(const FisherInfo& fisher) {
    json payload{{"task", fisher.task},
                 {"kind", fisher.kind == FisherKind::diagonal ? "diagonal" : "full"},
                 {"dim", fisher.dim},
                 {"diag", fisher.diag},
                 {"full", fisher.full},
                 {"n_samples", fisher.n_samples}};
    return envelope("fisher", std::move(payload)).dump();
}

FisherInfo fisher_from_json(const std::string& text) {
    const json p = open_envelope(text, "fisher");
    FisherInfo f;
    f.task = p.at("task").get<int>();
    const std::string kind = p.at("kind").get<std::string>();
    if (kind == "diagonal") f.kind = FisherKind::diagonal;
    else if (kind == "full") f.kind = FisherKind::full;
    else throw IoError("unknown fisher kind: " + kind);
    f.dim = p.at("dim").get<int>();
    f.diag = p.at("diag").get<Vec>();
    f.full = p.at("full").get<Vec>();
    f.n_samples = p.at("n_samples").get<std::int64_t>();
    f.validate();
    return f;
}

std::string task_snapshot_to_json(const TaskSnapshot& snapshot) {
    json payload{{"task", snapshot.task}, {"theta", snapshot.theta}, {"usage", snapshot.usage}};
    return envelope("task_snapshot", std::move(payload)).dump();
}

TaskSnapshot task_snapshot_from_json(const std::string& text) {
    const json p = open_envelope(text, "task_snapshot");
    TaskSnapshot s;
    s.task = p.at("task").get<int>();
    s.theta = p.at("theta").get<Vec>();
    s.usage = p.at("usage").get<Vec>();
    s.validate();
    return s;
}

std::string stream_to_json(const TaskStream& stream) {
    json tasks = json::array();
    for (const auto& t : stream.tasks) {
        tasks.push_back(json{{"task_id", t.task_id},
                             {"kind", task_kind_name(t.kind)},
                             {"input_dim", t.input_dim},
                             {"n_classes", t.n_classes},
                             {"angle_deg", t.angle_deg},
                             {"class_radius", t.class_radius},
                             {"noise_sigma", t.noise_sigma},
                             {"perm_seed", t.perm_seed},
                             {"teacher", t.teacher}});
    }
    json payload{{"ordering", ordering_name(stream.ordering)}, {"tasks", std::move(tasks)}};
    return envelope("task_stream", std::move(payload)).dump();
}

TaskStream stream_from_json(const std::string& text) {
    const json p = open_envelope(text, "task_stream");
    TaskStream stream;
    stream.ordering = parse_ordering(p.at("ordering").get<std::string>());
    for (const auto& t : p.at("tasks")) {
        TaskSpec spec;
        spec.task_id = t.at("task_id").get<int>();
        spec.kind = parse_task_kind(t.at("kind").get<std::string>());
        spec.input_dim = t.at("input_dim").get<int>();
        spec.n_classes = t.at("n_classes").get<int>();
        spec.angle_deg = t.at("angle_deg").get<double>();
        spec.class_radius = t.at("class_radius").get<double>();
        spec.noise_sigma = t.at("noise_sigma").get<double>();
        spec.perm_seed = t.at("perm_seed").get<std::uint64_t>();
        spec.teacher = t.at("teacher").get<Vec>();
        spec.validate();
        stream.tasks.push_back(std::move(spec));
    }
    return stream;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << content;
    if (!out) throw IoError("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("read failed: " + path);
    return ss.str();
}

}  // namespace papi
