#include "crossfuse/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "crossfuse/checkpoint.hpp"
#include "crossfuse/errors.hpp"

namespace crossfuse {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string num(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

const Tensor& any_input(const Sample& s)
{
    return s.rgb.empty() ? s.zyx : s.rgb;
}

}  // namespace

void TrainConfig::validate() const
{
    if (iterations < 0) {
        throw DomainError("train: iterations must be >= 0");
    }
    if (!(eta0 > 0.0)) {
        throw DomainError("train: eta0 must be positive");
    }
    if (!(alpha >= 0.0)) {
        throw DomainError("train: alpha must be >= 0");
    }
    if (batch_size < 1) {
        throw DomainError("train: batch_size must be >= 1");
    }
    if (eval_every < 1) {
        throw DomainError("train: eval_every must be >= 1");
    }
    if (rotation_range_deg < 0.0) {
        throw DomainError("train: rotation range must be >= 0");
    }
}

TrainConfig toy_train_config()
{
    TrainConfig c;
    c.iterations = 2000;
    c.eval_every = 200;
    // Five frames are memorized, not generalized.
    c.eta0 = 0.003;
    c.augment = false;
    return c;
}

double poly_lr(long iteration, const TrainConfig& cfg)
{
    if (cfg.iterations <= 0) {
        throw DomainError("poly_lr: N must be positive");
    }
    if (iteration < 0 || iteration > cfg.iterations) {
        throw DomainError("poly_lr: iteration " + std::to_string(iteration) + " outside [0, " +
                          std::to_string(cfg.iterations) + "]");
    }
    const double frac = 1.0 - static_cast<double>(iteration) / static_cast<double>(cfg.iterations);
    return cfg.eta0 * std::pow(frac, cfg.alpha);
}

void adam_step(std::vector<ParamView>& params, AdamState& state, double lr, const TrainConfig& cfg, long iteration)
{
    if (state.m.size() != params.size()) {
        state.m.clear();
        state.v.clear();
        for (const ParamView& p : params) {
            state.m.emplace_back(p.value.size(), 0.0);
            state.v.emplace_back(p.value.size(), 0.0);
        }
        state.step = 0;
    }
    for (std::size_t k = 0; k < params.size(); ++k) {
        if (state.m[k].size() != params[k].value.size() || params[k].grad.size() != params[k].value.size()) {
            throw ShapeError("adam_step: state does not match parameter " + params[k].name);
        }
        for (double g : params[k].grad) {
            if (!std::isfinite(g)) {
                throw DivergenceError("non-finite gradient in " + params[k].name + " at iteration " +
                                          std::to_string(iteration),
                                      iteration);
            }
        }
    }
    state.step += 1;
    const double b1 = cfg.adam_beta1;
    const double b2 = cfg.adam_beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
    for (std::size_t k = 0; k < params.size(); ++k) {
        ParamView& p = params[k];
        std::vector<double>& m = state.m[k];
        std::vector<double>& v = state.v[k];
        const double wd = p.decay ? cfg.weight_decay : 0.0;
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            const double g = p.grad[i] + wd * p.value[i];
            m[i] = b1 * m[i] + (1.0 - b1) * g;
            v[i] = b2 * v[i] + (1.0 - b2) * g * g;
            const double mhat = m[i] / c1;
            const double vhat = v[i] / c2;
            p.value[i] -= lr * mhat / (std::sqrt(vhat) + cfg.adam_eps);
        }
    }
}

int Sample::height() const
{
    return any_input(*this).shape().h;
}

int Sample::width() const
{
    return any_input(*this).shape().w;
}

Sample make_sample(const std::string& id, const std::string& category, const Image8* rgb, const DenseZyxImage* zyx,
                   const LabelMap* labels)
{
    Sample s;
    s.id = id;
    s.category = category;
    int h = -1;
    int w = -1;
    auto agree = [&](int hh, int ww, const char* what) {
        if (h >= 0 && (hh != h || ww != w)) {
            throw ShapeError("sample " + id + ": " + what + " is " + std::to_string(hh) + "x" + std::to_string(ww) +
                             ", expected " + std::to_string(h) + "x" + std::to_string(w));
        }
        h = hh;
        w = ww;
    };
    if (rgb != nullptr) {
        if (rgb->channels != 3) {
            throw ShapeError("sample " + id + ": RGB image must have 3 channels");
        }
        agree(rgb->height, rgb->width, "RGB image");
        s.rgb = Tensor(Shape{1, 3, h, w});
        for (int c = 0; c < 3; ++c) {
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < w; ++x) {
                    s.rgb.at(0, c, y, x) = rgb->at(x, y, c) / 255.0;
                }
            }
        }
    }
    if (zyx != nullptr) {
        agree(zyx->height, zyx->width, "ZYX image");
        s.zyx = Tensor(Shape{1, 3, h, w});
        const std::vector<double>* planes[3] = {&zyx->z, &zyx->y, &zyx->x};
        for (int c = 0; c < 3; ++c) {
            double* dst = s.zyx.plane(0, c);
            for (std::size_t i = 0; i < planes[c]->size(); ++i) {
                dst[i] = (*planes[c])[i] * kZyxScale;
            }
        }
    }
    if (labels != nullptr) {
        agree(labels->height, labels->width, "ground truth");
        s.labels = *labels;
    }
    if (h < 0) {
        throw ContractError("sample " + id + ": no inputs");
    }
    return s;
}

ModalInputs inputs_of(const Sample& s)
{
    ModalInputs in;
    in.rgb = s.rgb.empty() ? nullptr : &s.rgb;
    in.zyx = s.zyx.empty() ? nullptr : &s.zyx;
    return in;
}

Tensor rotate_bilinear(const Tensor& t, double angle_deg)
{
    const Shape s = t.shape();
    Tensor out(s);
    const double th = angle_deg * kPi / 180.0;
    const double cs = std::cos(th);
    const double sn = std::sin(th);
    const double cx = (s.w - 1) / 2.0;
    const double cy = (s.h - 1) / 2.0;
    for (int y = 0; y < s.h; ++y) {
        for (int x = 0; x < s.w; ++x) {
            const double dx = x - cx;
            const double dy = y - cy;
            const double sx = cx + cs * dx + sn * dy;
            const double sy = cy - sn * dx + cs * dy;
            // Tolerate rounding just outside the border.
            if (sx < -1e-9 || sy < -1e-9 || sx > s.w - 1 + 1e-9 || sy > s.h - 1 + 1e-9) {
                continue;
            }
            const int x0 = std::min(std::max(static_cast<int>(std::floor(sx)), 0), std::max(s.w - 2, 0));
            const int y0 = std::min(std::max(static_cast<int>(std::floor(sy)), 0), std::max(s.h - 2, 0));
            const int x1 = std::min(x0 + 1, s.w - 1);
            const int y1 = std::min(y0 + 1, s.h - 1);
            const double fx = std::clamp(sx - x0, 0.0, 1.0);
            const double fy = std::clamp(sy - y0, 0.0, 1.0);
            for (int n = 0; n < s.n; ++n) {
                for (int c = 0; c < s.c; ++c) {
                    const double* p = t.plane(n, c);
                    const double top = (1.0 - fx) * p[y0 * s.w + x0] + fx * p[y0 * s.w + x1];
                    const double bot = (1.0 - fx) * p[y1 * s.w + x0] + fx * p[y1 * s.w + x1];
                    out.at(n, c, y, x) = (1.0 - fy) * top + fy * bot;
                }
            }
        }
    }
    return out;
}

LabelMap rotate_nearest(const LabelMap& labels, double angle_deg)
{
    LabelMap out(labels.batch, labels.height, labels.width, kIgnoreLabel);
    const double th = angle_deg * kPi / 180.0;
    const double cs = std::cos(th);
    const double sn = std::sin(th);
    const double cx = (labels.width - 1) / 2.0;
    const double cy = (labels.height - 1) / 2.0;
    for (int y = 0; y < labels.height; ++y) {
        for (int x = 0; x < labels.width; ++x) {
            const double dx = x - cx;
            const double dy = y - cy;
            const long sx = std::lround(cx + cs * dx + sn * dy);
            const long sy = std::lround(cy - sn * dx + cs * dy);
            if (sx < 0 || sy < 0 || sx >= labels.width || sy >= labels.height) {
                continue;
            }
            for (int n = 0; n < labels.batch; ++n) {
                out.at(n, y, x) = labels.at(n, static_cast<int>(sy), static_cast<int>(sx));
            }
        }
    }
    return out;
}

Sample rotate_sample(const Sample& s, double angle_deg)
{
    Sample out;
    out.id = s.id;
    out.category = s.category;
    if (!s.rgb.empty()) {
        out.rgb = rotate_bilinear(s.rgb, angle_deg);
    }
    if (!s.zyx.empty()) {
        out.zyx = rotate_bilinear(s.zyx, angle_deg);
    }
    if (!s.labels.data.empty()) {
        out.labels = rotate_nearest(s.labels, angle_deg);
    }
    return out;
}

Sample augment_rotation(const Sample& s, RngState& rng, double range_deg)
{
    return rotate_sample(s, rng.uniform(-range_deg, range_deg));
}

std::vector<double> road_confidence(FusionNetwork& net, const Sample& s)
{
    RngState unused(0);
    const Tensor logits = net.forward(inputs_of(s), false, unused, false);
    return class_probability(logits, kRoadLabel);
}

PrCurve evaluate(FusionNetwork& net, const std::vector<Sample>& samples, int num_thresholds)
{
    PrCurve curve;
    curve.thresholds = uniform_thresholds(num_thresholds);
    for (const Sample& s : samples) {
        if (s.labels.data.empty()) {
            continue;
        }
        accumulate(curve, road_confidence(net, s), s.labels.data);
    }
    return curve;
}

std::string format_log_record(const TrainLogRecord& r)
{
    char buf[256];
    char val[32] = "-";
    if (r.val_maxf) {
        std::snprintf(val, sizeof val, "%.6f", *r.val_maxf);
    }
    std::snprintf(buf, sizeof buf, "iter=%ld loss=%.9g lr=%.9g val_maxf=%s best_maxf=%.6f saved=%d", r.iteration,
                  r.loss, r.lr, val, r.best_maxf, r.saved ? 1 : 0);
    return buf;
}

void restore_parameters(FusionNetwork& net, const std::vector<std::vector<double>>& values)
{
    std::vector<ParamView> views = net.parameters();
    if (views.size() != values.size()) {
        throw ShapeError("restore_parameters: parameter count differs");
    }
    for (std::size_t k = 0; k < views.size(); ++k) {
        if (views[k].value.size() != values[k].size()) {
            throw ShapeError("restore_parameters: size of " + views[k].name + " differs");
        }
        std::copy(values[k].begin(), values[k].end(), views[k].value.begin());
    }
}

TrainResult train(FusionNetwork& net, const std::vector<Sample>& train_set, const std::vector<Sample>& val_set,
                  const TrainConfig& cfg, std::ostream* log_out)
{
    cfg.validate();
    TrainResult result;
    if (cfg.iterations == 0) {
        return result;
    }
    if (train_set.empty() || val_set.empty()) {
        throw ContractError("train: training and validation sets must be non-empty");
    }
    for (const Sample& s : train_set) {
        if ((net.requires_rgb() && s.rgb.empty()) || (net.requires_zyx() && s.zyx.empty())) {
            throw ContractError("train: sample " + s.id + " lacks a modality required by mode " +
                                to_string(net.mode()));
        }
        if (s.labels.data.empty()) {
            throw ContractError("train: sample " + s.id + " has no ground truth");
        }
    }

    RngState rng(cfg.seed);
    AdamState adam;
    std::vector<ParamView> params = net.parameters();
    std::vector<std::size_t> order(train_set.size());
    std::size_t cursor = order.size();
    auto next_index = [&] {
        if (cursor == order.size()) {
            std::iota(order.begin(), order.end(), std::size_t{0});
            for (std::size_t i = order.size(); i > 1; --i) {
                std::swap(order[i - 1], order[rng.below(i)]);
            }
            cursor = 0;
        }
        return order[cursor++];
    };

    for (long it = 0; it < cfg.iterations; ++it) {
        const double lr = poly_lr(it, cfg);
        net.zero_grad();
        double loss = 0.0;
        for (int b = 0; b < cfg.batch_size; ++b) {
            const Sample& base = train_set[next_index()];
            Sample aug;
            if (cfg.augment && cfg.rotation_range_deg > 0.0) {
                aug = augment_rotation(base, rng, cfg.rotation_range_deg);
            }
            // A rotation that hides every labeled pixel falls back to the original frame.
            const bool use_aug = !aug.labels.data.empty() &&
                                 std::any_of(aug.labels.data.begin(), aug.labels.data.end(),
                                             [](std::uint8_t l) { return l != kIgnoreLabel; });
            const Sample& s = use_aug ? aug : base;
            const Tensor logits = net.forward(inputs_of(s), true, rng, true);
            LossResult lr_res = softmax_cross_entropy(logits, s.labels);
            if (!std::isfinite(lr_res.loss)) {
                if (!cfg.checkpoint_path.empty()) {
                    net.metadata()["diverged_iteration"] = std::to_string(it);
                    save_checkpoint(net, cfg.checkpoint_path.string() + ".diverged");
                }
                throw DivergenceError("non-finite loss at iteration " + std::to_string(it) + " (sample " +
                                          base.id + ", lr " + num(lr) + ")",
                                      it);
            }
            loss += lr_res.loss / cfg.batch_size;
            Tensor g = std::move(lr_res.grad);
            for (double& v : g.values()) {
                v /= cfg.batch_size;
            }
            net.backward(g);
        }
        adam_step(params, adam, lr, cfg, it);

        TrainLogRecord rec;
        rec.iteration = it;
        rec.loss = loss;
        rec.lr = lr;
        rec.best_maxf = result.best_maxf;
        if ((it + 1) % cfg.eval_every == 0 || it + 1 == cfg.iterations) {
            const PrCurve curve = evaluate(net, val_set, cfg.num_thresholds);
            const MaxFResult m = max_f(curve);
            rec.val_maxf = m.maxf;
            if (result.best_iteration < 0 || m.maxf > result.best_maxf) {
                result.best_maxf = m.maxf;
                result.best_threshold = m.threshold;
                result.best_iteration = it;
                result.best_parameters.clear();
                for (const ParamView& p : params) {
                    result.best_parameters.emplace_back(p.value.begin(), p.value.end());
                }
                net.metadata()["val_maxf"] = num(m.maxf);
                net.metadata()["val_threshold"] = num(m.threshold);
                net.metadata()["iteration"] = std::to_string(it + 1);
                net.metadata()["seed"] = std::to_string(cfg.seed);
                if (!cfg.checkpoint_path.empty()) {
                    save_checkpoint(net, cfg.checkpoint_path);
                }
                rec.saved = true;
            }
            rec.best_maxf = result.best_maxf;
        }
        if (log_out != nullptr) {
            *log_out << format_log_record(rec) << '\n';
        }
        result.log.push_back(rec);
    }
    return result;
}

}  // namespace crossfuse
