#include "papi/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "papi/rng.hpp"

namespace papi {

const char* task_kind_name(TaskKind k) {
    switch (k) {
        case TaskKind::rotated_gaussians: return "rotated_gaussians";
        case TaskKind::permuted_features: return "permuted_features";
        case TaskKind::linear_teacher: return "linear_teacher";
    }
    return "?";
}

const char* ordering_name(Ordering o) {
    switch (o) {
        case Ordering::iid: return "iid";
        case Ordering::fixed: return "fixed";
        case Ordering::correlated: return "correlated";
    }
    return "?";
}

TaskKind parse_task_kind(const std::string& s) {
    if (s == "rotated_gaussians") return TaskKind::rotated_gaussians;
    if (s == "permuted_features") return TaskKind::permuted_features;
    if (s == "linear_teacher") return TaskKind::linear_teacher;
    throw ConfigError("unknown task kind: " + s);
}

Ordering parse_ordering(const std::string& s) {
    if (s == "iid") return Ordering::iid;
    if (s == "fixed") return Ordering::fixed;
    if (s == "correlated") return Ordering::correlated;
    throw ConfigError("unknown ordering: " + s);
}

void TaskSpec::validate() const {
    if (input_dim < 2) throw ConfigError("task input_dim must be >= 2");
    if (n_classes < 1) throw ConfigError("task n_classes must be >= 1");
    if (kind != TaskKind::linear_teacher) {
        if (n_classes < 2) throw ConfigError("classification tasks need >= 2 classes");
        if (!(class_radius > 0.0)) throw ConfigError("class_radius must be positive");
        if (!(noise_sigma > 0.0)) throw ConfigError("noise_sigma must be positive");
    } else if (teacher.size() != static_cast<std::size_t>(n_classes) * input_dim) {
        throw ConfigError("teacher shape must be n_classes x input_dim");
    }
}

namespace {

double reduce_angle_deg(double a) {
    double r = std::fmod(a, 360.0);
    if (r < 0.0) r += 360.0;
    return r;
}

std::vector<int> permutation_of(int dim, std::uint64_t perm_seed) {
    std::vector<int> p(static_cast<std::size_t>(dim));
    std::iota(p.begin(), p.end(), 0);
    Rng rng = derive_rng(perm_seed, {0x7065726dull});
    rng.shuffle(p);
    return p;
}

}  // namespace

Vec class_mean(const TaskSpec& spec, int c) {
    spec.validate();
    if (c < 0 || c >= spec.n_classes) throw ContractError("class index out of range");
    if (spec.kind == TaskKind::linear_teacher)
        throw ContractError("linear_teacher has no class means");
    const double pi = std::acos(-1.0);
    const double base = reduce_angle_deg(spec.angle_deg) * pi / 180.0;
    const double ang = base + 2.0 * pi * c / spec.n_classes;
    Vec m(static_cast<std::size_t>(spec.input_dim), 0.0);
    m[0] = spec.class_radius * std::cos(ang);
    m[1] = spec.class_radius * std::sin(ang);
    if (spec.kind == TaskKind::permuted_features) {
        const auto p = permutation_of(spec.input_dim, spec.perm_seed);
        Vec out(m.size());
        for (int j = 0; j < spec.input_dim; ++j) out[static_cast<std::size_t>(j)] = m[p[j]];
        return out;
    }
    return m;
}

TaskStream make_stream(TaskKind kind, int n_tasks, const StreamKnobs& knobs, Ordering ordering,
                       std::uint64_t seed) {
    if (n_tasks < 1) throw ConfigError("stream needs n_tasks >= 1");

    TaskStream stream;
    stream.ordering = ordering;
    stream.tasks.reserve(static_cast<std::size_t>(n_tasks));
    for (int i = 0; i < n_tasks; ++i) {
        TaskSpec spec;
        spec.kind = kind;
        spec.input_dim = knobs.input_dim;
        spec.n_classes = knobs.n_classes;
        spec.class_radius = knobs.class_radius;
        spec.noise_sigma = knobs.noise_sigma;
        if (kind == TaskKind::rotated_gaussians) {
            spec.angle_deg = knobs.angle_gap_deg * i;
        } else if (kind == TaskKind::permuted_features) {
            spec.perm_seed = mix64(seed, 0x7461736bull + static_cast<std::uint64_t>(i));
        } else {
            Rng rng = derive_rng(seed, {0x746368ull, static_cast<std::uint64_t>(i)});
            const double s = 1.0 / std::sqrt(static_cast<double>(knobs.input_dim));
            spec.teacher.resize(static_cast<std::size_t>(knobs.n_classes) * knobs.input_dim);
            for (double& w : spec.teacher) w = s * rng.normal();
        }
        stream.tasks.push_back(std::move(spec));
    }

    if (ordering == Ordering::iid) {
        Rng rng = derive_rng(seed, {0x6f726452ull});
        rng.shuffle(stream.tasks);
    } else if (ordering == Ordering::correlated && kind == TaskKind::rotated_gaussians) {
        std::stable_sort(stream.tasks.begin(), stream.tasks.end(),
                         [](const TaskSpec& a, const TaskSpec& b) {
                             return a.angle_deg < b.angle_deg;
                         });
    }
    for (int i = 0; i < n_tasks; ++i) {
        stream.tasks[static_cast<std::size_t>(i)].task_id = i + 1;
        stream.tasks[static_cast<std::size_t>(i)].validate();
    }
    return stream;
}

Dataset sample_batch(const TaskSpec& spec, int n, std::uint64_t seed) {
    spec.validate();
    if (n < 1) throw ContractError("sample_batch needs n >= 1");

    Dataset data;
    data.dim = spec.input_dim;
    data.features.resize(static_cast<std::size_t>(n) * spec.input_dim);
    data.targets.reserve(static_cast<std::size_t>(n));
    Rng rng = derive_rng(seed, {0x736d70ull, static_cast<std::uint64_t>(spec.task_id)});

    if (spec.kind == TaskKind::linear_teacher) {
        for (int i = 0; i < n; ++i) {
            double* x = data.features.data() + static_cast<std::size_t>(i) * spec.input_dim;
            for (int j = 0; j < spec.input_dim; ++j) x[j] = rng.normal();
            Vec y(static_cast<std::size_t>(spec.n_classes), 0.0);
            for (int c = 0; c < spec.n_classes; ++c) {
                const double* w = spec.teacher.data() +
                                  static_cast<std::size_t>(c) * spec.input_dim;
                double acc = 0.0;
                for (int j = 0; j < spec.input_dim; ++j) acc += w[j] * x[j];
                y[static_cast<std::size_t>(c)] = acc;
            }
            data.targets.push_back(Target::regress(std::move(y)));
        }
        return data;
    }

    // balanced labels, then a shuffle so batches are not label-ordered
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = i % spec.n_classes;
    rng.shuffle(labels);

    std::vector<Vec> means(static_cast<std::size_t>(spec.n_classes));
    for (int c = 0; c < spec.n_classes; ++c) means[static_cast<std::size_t>(c)] = class_mean(spec, c);

    for (int i = 0; i < n; ++i) {
        const int c = labels[static_cast<std::size_t>(i)];
        double* x = data.features.data() + static_cast<std::size_t>(i) * spec.input_dim;
        const Vec& m = means[static_cast<std::size_t>(c)];
        for (int j = 0; j < spec.input_dim; ++j)
            x[j] = m[static_cast<std::size_t>(j)] + spec.noise_sigma * rng.normal();
        data.targets.push_back(Target::label(c));
    }
    return data;
}

double random_baseline_loss(const TaskSpec& spec, const PathwayLayout& layout, int k,
                            int n_inits, int n_eval, std::uint64_t seed, par::Exec exec,
                            EnergyLedger* ledger, Phase phase) {
    if (n_inits < 1) throw ContractError("random_baseline_loss needs n_inits >= 1");
    if (n_eval < 1) throw ContractError("random_baseline_loss needs n_eval >= 1");
    const Dataset data = sample_batch(spec, n_eval, mix64(seed, 0x65766cull));
    double loss = 0.0;
    for (int j = 0; j < n_inits; ++j) {
        const ParamStore store =
            build(layout, layout.pathways(), mix64(mix64(seed, 0x726e64ull), j));
        loss += pathway_eval(store, layout, k, data, exec, ledger, phase).mean_loss;
    }
    return loss / static_cast<double>(n_inits);
}

}  // namespace papi
