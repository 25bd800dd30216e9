#include "tsa/deep.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "tsa/errors.hpp"

namespace tsa::deep {

namespace {

Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& a) {
    return a.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

Eigen::MatrixXd concat(const Eigen::MatrixXd& h, const Eigen::MatrixXd& x) {
    Eigen::MatrixXd v(h.rows() + x.rows(), h.cols());
    v << h, x;
    return v;
}

Eigen::MatrixXd affine(const CellParams& p, int gate, const Eigen::MatrixXd& v) {
    return (p.W[gate] * v).colwise() + p.b[gate];
}

void check_shapes(const Eigen::MatrixXd& x, const Eigen::MatrixXd& h, const CellParams& p) {
    if (x.rows() != p.input || h.rows() != p.hidden || x.cols() != h.cols()) {
        throw std::invalid_argument("recurrent step: shape mismatch");
    }
}

// Everything the backward pass needs from one step.
struct StepCache {
    Eigen::MatrixXd v;       // [h_prev; x]
    Eigen::MatrixXd h_prev;
    Eigen::MatrixXd c_prev;
    std::vector<Eigen::MatrixXd> gate;  // post-activation gate values
    Eigen::MatrixXd cand_pre;           // candidate pre-activation
    Eigen::MatrixXd c;                  // LSTM cell state
    Eigen::MatrixXd h;
    Eigen::MatrixXd u;                  // GRU: [r * h_prev; x]
};

StepCache step(const CellParams& p, const Activation& act, const Eigen::MatrixXd& x, const Eigen::MatrixXd& h_prev,
               const Eigen::MatrixXd& c_prev) {
    StepCache s;
    s.h_prev = h_prev;
    s.v = concat(h_prev, x);
    switch (p.kind) {
        case CellKind::simple:
            s.cand_pre = affine(p, 0, s.v);
            s.h = act(s.cand_pre);
            break;
        case CellKind::lstm: {
            s.c_prev = c_prev;
            const auto f = sigmoid(affine(p, 0, s.v));
            const auto i = sigmoid(affine(p, 1, s.v));
            s.cand_pre = affine(p, 2, s.v);
            const auto g = act(s.cand_pre);
            const auto o = sigmoid(affine(p, 3, s.v));
            s.c = f.cwiseProduct(c_prev) + i.cwiseProduct(g);
            s.h = o.cwiseProduct(act(s.c));
            s.gate = {f, i, g, o};
            break;
        }
        case CellKind::gru: {
            const auto z = sigmoid(affine(p, 0, s.v));
            const auto r = sigmoid(affine(p, 1, s.v));
            s.u = concat(r.cwiseProduct(h_prev), x);
            s.cand_pre = affine(p, 2, s.u);
            const auto cand = act(s.cand_pre);
            s.h = (1.0 - z.array()).matrix().cwiseProduct(h_prev) + z.cwiseProduct(cand);
            s.gate = {z, r, cand};
            break;
        }
    }
    return s;
}

struct CellGrads {
    std::vector<Eigen::MatrixXd> W;
    std::vector<Eigen::VectorXd> b;

    explicit CellGrads(const CellParams& p) {
        for (const auto& w : p.W) W.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
        for (const auto& v : p.b) b.push_back(Eigen::VectorXd::Zero(v.size()));
    }
    void add(int gate, const Eigen::MatrixXd& da, const Eigen::MatrixXd& input) {
        W[gate].noalias() += da * input.transpose();
        b[gate] += da.rowwise().sum();
    }
};

// Backpropagates dh_final through the cached unroll, accumulating into grads.
void backprop(const CellParams& p, const Activation& act, const std::vector<StepCache>& trace,
              Eigen::MatrixXd dh, CellGrads& grads) {
    const int H = p.hidden;
    Eigen::MatrixXd dc = Eigen::MatrixXd::Zero(dh.rows(), dh.cols());
    for (auto it = trace.rbegin(); it != trace.rend(); ++it) {
        const auto& s = *it;
        switch (p.kind) {
            case CellKind::simple: {
                const Eigen::MatrixXd da = dh.cwiseProduct(act.derivative(s.cand_pre));
                grads.add(0, da, s.v);
                dh = (p.W[0].transpose() * da).topRows(H);
                break;
            }
            case CellKind::lstm: {
                const auto& f = s.gate[0];
                const auto& i = s.gate[1];
                const auto& g = s.gate[2];
                const auto& o = s.gate[3];
                const Eigen::MatrixXd act_c = act(s.c);
                dc += dh.cwiseProduct(o).cwiseProduct(act.derivative(s.c));
                const Eigen::MatrixXd da_f = dc.cwiseProduct(s.c_prev).cwiseProduct(f.cwiseProduct((1.0 - f.array()).matrix()));
                const Eigen::MatrixXd da_i = dc.cwiseProduct(g).cwiseProduct(i.cwiseProduct((1.0 - i.array()).matrix()));
                const Eigen::MatrixXd da_g = dc.cwiseProduct(i).cwiseProduct(act.derivative(s.cand_pre));
                const Eigen::MatrixXd da_o = dh.cwiseProduct(act_c).cwiseProduct(o.cwiseProduct((1.0 - o.array()).matrix()));
                grads.add(0, da_f, s.v);
                grads.add(1, da_i, s.v);
                grads.add(2, da_g, s.v);
                grads.add(3, da_o, s.v);
                const Eigen::MatrixXd dv = p.W[0].transpose() * da_f + p.W[1].transpose() * da_i +
                                           p.W[2].transpose() * da_g + p.W[3].transpose() * da_o;
                dh = dv.topRows(H);
                dc = dc.cwiseProduct(f);
                break;
            }
            case CellKind::gru: {
                const auto& z = s.gate[0];
                const auto& r = s.gate[1];
                const auto& cand = s.gate[2];
                const Eigen::MatrixXd da_h = dh.cwiseProduct(z).cwiseProduct(act.derivative(s.cand_pre));
                const Eigen::MatrixXd da_z =
                    dh.cwiseProduct(cand - s.h_prev).cwiseProduct(z.cwiseProduct((1.0 - z.array()).matrix()));
                const Eigen::MatrixXd du = (p.W[2].transpose() * da_h).topRows(H);
                const Eigen::MatrixXd da_r = du.cwiseProduct(s.h_prev).cwiseProduct(r.cwiseProduct((1.0 - r.array()).matrix()));
                grads.add(0, da_z, s.v);
                grads.add(1, da_r, s.v);
                grads.add(2, da_h, s.u);
                Eigen::MatrixXd dh_prev = dh.cwiseProduct((1.0 - z.array()).matrix()) + du.cwiseProduct(r);
                dh_prev += (p.W[0].transpose() * da_z + p.W[1].transpose() * da_r).topRows(H);
                dh = std::move(dh_prev);
                break;
            }
        }
    }
}

struct Unroll {
    std::vector<StepCache> forward;
    std::vector<StepCache> backward;
    Eigen::MatrixXd features;  // final hidden states stacked (H or 2H) x batch
    Eigen::RowVectorXd y;
};

Unroll unroll(const RnnModel& model, const Eigen::MatrixXd& windows, RecurrentState* state) {
    const auto& cfg = model.config;
    if (windows.rows() != cfg.window) throw std::invalid_argument("forward: window length mismatch");
    const auto B = windows.cols();
    const int H = cfg.hidden;

    Unroll u;
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(H, B);
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(H, B);
    if (state && state->h.size() > 0) {
        if (state->h.rows() != H || state->h.cols() != B) throw std::invalid_argument("carried state has wrong shape");
        h = state->h;
        c = state->c;
    }
    for (Eigen::Index t = 0; t < windows.rows(); ++t) {
        u.forward.push_back(step(model.forward_cell, cfg.activation, windows.row(t), h, c));
        h = u.forward.back().h;
        if (cfg.cell == CellKind::lstm) c = u.forward.back().c;
    }
    if (state) {
        state->h = h;
        state->c = c;
    }
    if (!cfg.bidirectional) {
        u.features = h;
    } else {
        Eigen::MatrixXd hb = Eigen::MatrixXd::Zero(H, B);
        Eigen::MatrixXd cb = Eigen::MatrixXd::Zero(H, B);
        for (Eigen::Index t = windows.rows(); t-- > 0;) {
            u.backward.push_back(step(model.backward_cell, cfg.activation, windows.row(t), hb, cb));
            hb = u.backward.back().h;
            if (cfg.cell == CellKind::lstm) cb = u.backward.back().c;
        }
        u.features.resize(2 * H, B);
        u.features << h, hb;
    }
    u.y = (model.head_w.transpose() * u.features).array() + model.head_b;
    return u;
}

void append_cell(const CellParams& p, Eigen::VectorXd& flat, Eigen::Index& at) {
    for (std::size_t g = 0; g < p.W.size(); ++g) {
        for (Eigen::Index r = 0; r < p.W[g].rows(); ++r) {
            for (Eigen::Index c = 0; c < p.W[g].cols(); ++c) flat[at++] = p.W[g](r, c);
        }
        for (Eigen::Index r = 0; r < p.b[g].size(); ++r) flat[at++] = p.b[g][r];
    }
}

void read_cell(CellParams& p, const Eigen::VectorXd& flat, Eigen::Index& at) {
    for (std::size_t g = 0; g < p.W.size(); ++g) {
        for (Eigen::Index r = 0; r < p.W[g].rows(); ++r) {
            for (Eigen::Index c = 0; c < p.W[g].cols(); ++c) p.W[g](r, c) = flat[at++];
        }
        for (Eigen::Index r = 0; r < p.b[g].size(); ++r) p.b[g][r] = flat[at++];
    }
}

void append_grads(const CellGrads& g, Eigen::VectorXd& flat, Eigen::Index& at) {
    for (std::size_t k = 0; k < g.W.size(); ++k) {
        for (Eigen::Index r = 0; r < g.W[k].rows(); ++r) {
            for (Eigen::Index c = 0; c < g.W[k].cols(); ++c) flat[at++] = g.W[k](r, c);
        }
        for (Eigen::Index r = 0; r < g.b[k].size(); ++r) flat[at++] = g.b[k][r];
    }
}

Eigen::Index cell_size(const CellParams& p) {
    Eigen::Index n = 0;
    for (std::size_t g = 0; g < p.W.size(); ++g) n += p.W[g].size() + p.b[g].size();
    return n;
}

}  // namespace

std::string to_string(ActivationKind kind) {
    switch (kind) {
        case ActivationKind::sigmoid: return "sigmoid";
        case ActivationKind::tanh: return "tanh";
        case ActivationKind::relu: return "relu";
        case ActivationKind::softplus: return "softplus";
        case ActivationKind::linear: return "linear";
    }
    return "unknown";
}

ActivationKind activation_from_string(const std::string& name) {
    if (name == "sigmoid") return ActivationKind::sigmoid;
    if (name == "tanh") return ActivationKind::tanh;
    if (name == "relu") return ActivationKind::relu;
    if (name == "softplus") return ActivationKind::softplus;
    if (name == "linear") return ActivationKind::linear;
    throw std::invalid_argument("unknown activation '" + name + "'");
}

Eigen::MatrixXd Activation::operator()(const Eigen::MatrixXd& a) const {
    switch (kind) {
        case ActivationKind::sigmoid: return sigmoid(a);
        case ActivationKind::tanh: return a.array().tanh().matrix();
        case ActivationKind::relu: return a.cwiseMax(0.0);
        case ActivationKind::softplus:
            return a.unaryExpr([](double v) { return v > 30.0 ? v : std::log1p(std::exp(v)); });
        case ActivationKind::linear: return a;
    }
    return a;
}

Eigen::MatrixXd Activation::derivative(const Eigen::MatrixXd& a) const {
    switch (kind) {
        case ActivationKind::sigmoid: {
            const auto s = sigmoid(a);
            return s.cwiseProduct((1.0 - s.array()).matrix());
        }
        case ActivationKind::tanh: return (1.0 - a.array().tanh().square()).matrix();
        case ActivationKind::relu: return a.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; });
        case ActivationKind::softplus: return sigmoid(a);
        case ActivationKind::linear: return Eigen::MatrixXd::Ones(a.rows(), a.cols());
    }
    return a;
}

std::string to_string(CellKind kind) {
    switch (kind) {
        case CellKind::simple: return "simple";
        case CellKind::lstm: return "lstm";
        case CellKind::gru: return "gru";
    }
    return "unknown";
}

CellKind cell_from_string(const std::string& name) {
    if (name == "simple" || name == "rnn") return CellKind::simple;
    if (name == "lstm") return CellKind::lstm;
    if (name == "gru") return CellKind::gru;
    throw std::invalid_argument("unknown cell kind '" + name + "'");
}

int gate_count(CellKind kind) {
    switch (kind) {
        case CellKind::simple: return 1;
        case CellKind::lstm: return 4;
        case CellKind::gru: return 3;
    }
    return 0;
}

CellParams CellParams::zeros(CellKind kind, int hidden, int input) {
    CellParams p;
    p.kind = kind;
    p.hidden = hidden;
    p.input = input;
    for (int g = 0; g < gate_count(kind); ++g) {
        p.W.push_back(Eigen::MatrixXd::Zero(hidden, hidden + input));
        p.b.push_back(Eigen::VectorXd::Zero(hidden));
    }
    return p;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> lstm_step(const Eigen::MatrixXd& x, const Eigen::MatrixXd& h_prev,
                                                      const Eigen::MatrixXd& c_prev, const CellParams& params,
                                                      Activation activation) {
    if (params.kind != CellKind::lstm) throw std::invalid_argument("lstm_step: params are not an LSTM cell");
    check_shapes(x, h_prev, params);
    if (c_prev.rows() != h_prev.rows() || c_prev.cols() != h_prev.cols()) {
        throw std::invalid_argument("lstm_step: cell state shape mismatch");
    }
    auto s = step(params, activation, x, h_prev, c_prev);
    return {std::move(s.h), std::move(s.c)};
}

Eigen::MatrixXd gru_step(const Eigen::MatrixXd& x, const Eigen::MatrixXd& h_prev, const CellParams& params,
                         Activation activation) {
    if (params.kind != CellKind::gru) throw std::invalid_argument("gru_step: params are not a GRU cell");
    check_shapes(x, h_prev, params);
    return step(params, activation, x, h_prev, {}).h;
}

Eigen::MatrixXd simple_step(const Eigen::MatrixXd& x, const Eigen::MatrixXd& h_prev, const CellParams& params,
                            Activation activation) {
    if (params.kind != CellKind::simple) throw std::invalid_argument("simple_step: params are not a simple cell");
    check_shapes(x, h_prev, params);
    return step(params, activation, x, h_prev, {}).h;
}

void RnnConfig::validate() const {
    if (window < 1) throw std::invalid_argument("rnn window must be >= 1");
    if (hidden < 1) throw std::invalid_argument("rnn hidden size must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("rnn batch size must be >= 1");
    if (epochs < 0) throw std::invalid_argument("rnn epochs must be >= 0");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("rnn learning rate must be positive");
    if (stateful && bidirectional) throw std::invalid_argument("stateful mode is unidirectional only");
}

RnnModel RnnModel::initialize(const RnnConfig& config) {
    config.validate();
    RnnModel m;
    m.config = config;
    std::mt19937_64 rng(config.initializer.seed);
    const auto& init = config.initializer;
    auto draw = [&]() {
        switch (init.kind) {
            case InitKind::uniform: return std::uniform_real_distribution<double>(init.a, init.b)(rng);
            case InitKind::normal: return std::normal_distribution<double>(init.a, init.b)(rng);
            case InitKind::truncated_normal: {
                std::normal_distribution<double> dist(init.a, init.b);
                while (true) {
                    const double z = dist(rng);
                    if (std::abs(z - init.a) <= 2.0 * init.b) return z;
                }
            }
        }
        return 0.0;
    };
    auto make_cell = [&]() {
        auto p = CellParams::zeros(config.cell, config.hidden, 1);
        for (auto& w : p.W) w = w.unaryExpr([&](double) { return draw(); });
        if (config.cell == CellKind::lstm) p.b[0].setOnes();
        return p;
    };
    m.forward_cell = make_cell();
    if (config.bidirectional) m.backward_cell = make_cell();
    m.head_w = Eigen::VectorXd::Zero(config.bidirectional ? 2 * config.hidden : config.hidden);
    m.head_w = m.head_w.unaryExpr([&](double) { return draw(); });
    m.head_b = 0.0;
    return m;
}

Eigen::Index RnnModel::parameter_count() const {
    Eigen::Index n = cell_size(forward_cell);
    if (config.bidirectional) n += cell_size(backward_cell);
    return n + head_w.size() + 1;
}

Eigen::VectorXd RnnModel::flatten() const {
    Eigen::VectorXd flat(parameter_count());
    Eigen::Index at = 0;
    append_cell(forward_cell, flat, at);
    if (config.bidirectional) append_cell(backward_cell, flat, at);
    flat.segment(at, head_w.size()) = head_w;
    at += head_w.size();
    flat[at] = head_b;
    return flat;
}

void RnnModel::unflatten(const Eigen::VectorXd& flat) {
    if (flat.size() != parameter_count()) throw std::invalid_argument("unflatten: wrong parameter count");
    Eigen::Index at = 0;
    read_cell(forward_cell, flat, at);
    if (config.bidirectional) read_cell(backward_cell, flat, at);
    head_w = flat.segment(at, head_w.size());
    at += head_w.size();
    head_b = flat[at];
}

Eigen::RowVectorXd forward_batch(const RnnModel& model, const Eigen::MatrixXd& windows, RecurrentState* state) {
    return unroll(model, windows, state).y;
}

double forward(const RnnModel& model, const Eigen::VectorXd& window) {
    return forward_batch(model, Eigen::MatrixXd(window), nullptr)[0];
}

BatchGradients bptt_gradients(const RnnModel& model, const Eigen::MatrixXd& windows, const Eigen::RowVectorXd& targets,
                              RecurrentState* state) {
    if (windows.cols() == 0 || targets.size() != windows.cols()) {
        throw std::invalid_argument("bptt_gradients: need one target per window");
    }
    const auto u = unroll(model, windows, state);
    const double B = static_cast<double>(windows.cols());
    const Eigen::RowVectorXd err = u.y - targets;

    BatchGradients out;
    out.loss = err.squaredNorm() / B;
    out.predictions = u.y;
    const Eigen::RowVectorXd dy = 2.0 * err / B;

    const Eigen::VectorXd d_head_w = u.features * dy.transpose();
    const double d_head_b = dy.sum();
    const Eigen::MatrixXd d_features = model.head_w * dy;
    const int H = model.config.hidden;

    CellGrads fwd(model.forward_cell);
    backprop(model.forward_cell, model.config.activation, u.forward, d_features.topRows(H), fwd);
    out.gradient.resize(model.parameter_count());
    Eigen::Index at = 0;
    append_grads(fwd, out.gradient, at);
    if (model.config.bidirectional) {
        CellGrads bwd(model.backward_cell);
        backprop(model.backward_cell, model.config.activation, u.backward, d_features.bottomRows(H), bwd);
        append_grads(bwd, out.gradient, at);
    }
    out.gradient.segment(at, d_head_w.size()) = d_head_w;
    at += d_head_w.size();
    out.gradient[at] = d_head_b;
    return out;
}

double batch_loss(const RnnModel& model, const Eigen::MatrixXd& windows, const Eigen::RowVectorXd& targets) {
    const auto y = forward_batch(model, windows);
    return (y - targets).squaredNorm() / static_cast<double>(windows.cols());
}

std::pair<Eigen::MatrixXd, Eigen::RowVectorXd> make_windows(const Eigen::VectorXd& series, int window) {
    if (series.size() <= window) throw std::invalid_argument("series must be longer than the window");
    const auto count = series.size() - window;
    Eigen::MatrixXd X(window, count);
    Eigen::RowVectorXd y(count);
    for (Eigen::Index k = 0; k < count; ++k) {
        X.col(k) = series.segment(k, window);
        y[k] = series[k + window];
    }
    return {X, y};
}

namespace {

struct Adam {
    Eigen::VectorXd m, v;
    long t = 0;
    double lr;

    explicit Adam(Eigen::Index n, double learning_rate)
        : m(Eigen::VectorXd::Zero(n)), v(Eigen::VectorXd::Zero(n)), lr(learning_rate) {}

    void update(Eigen::VectorXd& theta, const Eigen::VectorXd& g) {
        constexpr double beta1 = 0.9;
        constexpr double beta2 = 0.999;
        constexpr double eps = 1e-8;
        ++t;
        m = beta1 * m + (1.0 - beta1) * g;
        v = beta2 * v + (1.0 - beta2) * g.cwiseProduct(g);
        const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
        const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
        theta.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
    }
};

}  // namespace

TrainResult train(const RnnConfig& config, const Eigen::VectorXd& series) {
    RnnModel model = RnnModel::initialize(config);
    if (series.size() <= config.window + 1) throw ModelError("rnn: training series shorter than the window");
    model.mean = series.mean();
    const double spread = std::sqrt((series.array() - model.mean).square().mean());
    model.scale = spread > 0.0 ? spread : 1.0;
    const Eigen::VectorXd z = (series.array() - model.mean) / model.scale;

    // Batches as (windows, targets) in the order they are visited each epoch.
    std::vector<std::pair<Eigen::MatrixXd, Eigen::RowVectorXd>> batches;
    if (!config.stateful) {
        const auto [X, y] = make_windows(z, config.window);
        for (Eigen::Index first = 0; first < X.cols(); first += config.batch_size) {
            const auto count = std::min<Eigen::Index>(config.batch_size, X.cols() - first);
            batches.emplace_back(X.middleCols(first, count), y.segment(first, count));
        }
    } else {
        // batch_size contiguous streams, each cut into non-overlapping windows;
        // column s of batch k is the k-th window of stream s.
        const int B = config.batch_size;
        const int w = config.window;
        const Eigen::Index per_stream = (z.size() - 1) / (static_cast<Eigen::Index>(B) * w);
        if (per_stream < 1) throw ModelError("rnn: series too short for stateful batches of this size");
        const Eigen::Index stream_len = per_stream * w;
        for (Eigen::Index k = 0; k < per_stream; ++k) {
            Eigen::MatrixXd X(w, B);
            Eigen::RowVectorXd y(B);
            for (int s = 0; s < B; ++s) {
                const Eigen::Index first = s * stream_len + k * w;
                X.col(s) = z.segment(first, w);
                y[s] = z[first + w];
            }
            batches.emplace_back(std::move(X), std::move(y));
        }
    }

    Eigen::VectorXd theta = model.flatten();
    Adam adam(theta.size(), config.learning_rate);
    TrainResult result;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        RecurrentState state;
        double total = 0.0;
        Eigen::Index seen = 0;
        for (const auto& [X, y] : batches) {
            const auto g = bptt_gradients(model, X, y, config.stateful ? &state : nullptr);
            if (!std::isfinite(g.loss) || !g.gradient.allFinite()) {
                throw ModelError("rnn: training diverged at epoch " + std::to_string(epoch + 1));
            }
            total += g.loss * static_cast<double>(X.cols());
            seen += X.cols();
            adam.update(theta, g.gradient);
            model.unflatten(theta);
        }
        result.loss_history.push_back(total / static_cast<double>(seen));
    }
    result.model = std::move(model);
    return result;
}

namespace {

// Streams values one at a time through a stateful model; returns predictions
// for the point after each consumed value.
class StreamPredictor {
public:
    explicit StreamPredictor(const RnnModel& model) : model_(model) {
        state_.h = Eigen::MatrixXd::Zero(model.config.hidden, 1);
        state_.c = Eigen::MatrixXd::Zero(model.config.hidden, 1);
    }
    double consume(double z) {
        const auto s = step(model_.forward_cell, model_.config.activation, Eigen::MatrixXd::Constant(1, 1, z), state_.h,
                            state_.c);
        state_.h = s.h;
        if (model_.config.cell == CellKind::lstm) state_.c = s.c;
        return model_.head_w.dot(state_.h.col(0)) + model_.head_b;
    }

private:
    const RnnModel& model_;
    RecurrentState state_;
};

}  // namespace

Eigen::VectorXd predict_series(const RnnModel& model, const Eigen::VectorXd& history, const Eigen::VectorXd& future,
                               PredictMode mode) {
    const int w = model.config.window;
    if (history.size() < w) throw std::invalid_argument("predict_series: history shorter than the window");
    const auto horizon = future.size();
    Eigen::VectorXd out(horizon);
    if (horizon == 0) return out;

    if (model.config.stateful) {
        StreamPredictor stream(model);
        double next = 0.0;
        for (Eigen::Index t = 0; t < history.size(); ++t) next = stream.consume(model.standardize(history[t]));
        for (Eigen::Index h = 0; h < horizon; ++h) {
            out[h] = model.destandardize(next);
            const double fed = mode == PredictMode::one_step ? model.standardize(future[h]) : next;
            next = stream.consume(fed);
        }
        return out;
    }

    Eigen::VectorXd buffer(history.size() + horizon);
    buffer.head(history.size()) = history.unaryExpr([&](double v) { return model.standardize(v); });
    if (mode == PredictMode::one_step) {
        buffer.tail(horizon) = future.unaryExpr([&](double v) { return model.standardize(v); });
        Eigen::MatrixXd X(w, horizon);
        for (Eigen::Index h = 0; h < horizon; ++h) X.col(h) = buffer.segment(history.size() + h - w, w);
        const auto y = forward_batch(model, X);
        for (Eigen::Index h = 0; h < horizon; ++h) out[h] = model.destandardize(y[h]);
        return out;
    }
    for (Eigen::Index h = 0; h < horizon; ++h) {
        const Eigen::Index t = history.size() + h;
        buffer[t] = forward(model, Eigen::VectorXd(buffer.segment(t - w, w)));
        out[h] = model.destandardize(buffer[t]);
    }
    return out;
}

Eigen::VectorXd predict_series(const RnnModel& model, const Eigen::VectorXd& history, Eigen::Index horizon,
                               PredictMode mode) {
    if (mode == PredictMode::one_step) {
        throw std::invalid_argument("predict_series: one-step mode needs the observed future values");
    }
    return predict_series(model, history, Eigen::VectorXd::Zero(horizon), mode);
}

Eigen::VectorXd fitted_values(const RnnModel& model, const Eigen::VectorXd& series) {
    const int w = model.config.window;
    if (series.size() <= w) throw std::invalid_argument("fitted_values: series shorter than the window");
    if (model.config.stateful) {
        StreamPredictor stream(model);
        Eigen::VectorXd out(series.size() - w);
        for (Eigen::Index t = 0; t < series.size() - 1; ++t) {
            const double next = stream.consume(model.standardize(series[t]));
            if (t + 1 >= w) out[t + 1 - w] = model.destandardize(next);
        }
        return out;
    }
    Eigen::VectorXd z = series.unaryExpr([&](double v) { return model.standardize(v); });
    const auto [X, y] = make_windows(z, w);
    const auto pred = forward_batch(model, X);
    return pred.transpose().unaryExpr([&](double v) { return model.destandardize(v); });
}

}  // namespace tsa::deep
