#include "crossfuse/network.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "crossfuse/errors.hpp"

namespace crossfuse {

namespace {

LayerSpec make_layer(int index, LayerKind kind, int k, int stride, int dil_h, int dil_w, int in,
                     int out, double dropout, bool elu)
{
    LayerSpec l;
    l.index = index;
    l.kind = kind;
    l.kernel_h = k;
    l.kernel_w = k;
    l.stride = stride;
    l.dilation_h = dil_h;
    l.dilation_w = dil_w;
    if (kind == LayerKind::conv) {
        l.pad_h = dil_h * (k - 1) / 2;
        l.pad_w = dil_w * (k - 1) / 2;
    } else {
        l.pad_h = 1;
        l.pad_w = 1;
    }
    l.in_channels = in;
    l.out_channels = out;
    l.dropout_p = dropout;
    l.has_elu = elu;
    return l;
}

[[noreturn]] void spec_fail(int index, const std::string& what)
{
    throw SpecError("layer " + std::to_string(index) + ": " + what);
}

bool is_context(int index)
{
    return index >= kContextFirst && index <= kContextLast;
}

// Spatial extent after running one axis through every layer.
int propagate_extent(const NetworkSpec& spec, int extent, bool vertical)
{
    for (const LayerSpec& l : spec.layers) {
        const int k = vertical ? l.kernel_h : l.kernel_w;
        const int d = vertical ? l.dilation_h : l.dilation_w;
        const int p = vertical ? l.pad_h : l.pad_w;
        try {
            extent = l.kind == LayerKind::transposed_conv
                         ? transposed_output_size(extent, k, l.stride, d, p)
                         : conv_output_size(extent, k, l.stride, d, p);
        } catch (const GeometryError& e) {
            spec_fail(l.index, e.what());
        }
    }
    return extent;
}

}  // namespace

NetworkSpec default_spec(int feature_maps, int num_classes, int input_channels)
{
    if (feature_maps < 1 || num_classes < 1 || input_channels < 1) {
        throw SpecError("default_spec: feature maps, classes and input channels must be positive");
    }
    const int d = feature_maps;
    const int ctx = 4 * d;
    NetworkSpec s;
    s.first_layer_feature_maps = d;
    s.num_classes = num_classes;
    using K = LayerKind;
    s.layers.push_back(make_layer(1, K::strided_conv, 4, 2, 1, 1, input_channels, d, 0.0, true));
    s.layers.push_back(make_layer(2, K::conv, 3, 1, 1, 1, d, d, 0.0, true));
    s.layers.push_back(make_layer(3, K::strided_conv, 4, 2, 1, 1, d, 2 * d, 0.0, true));
    s.layers.push_back(make_layer(4, K::conv, 3, 1, 1, 1, 2 * d, 2 * d, 0.0, true));
    s.layers.push_back(make_layer(5, K::strided_conv, 4, 2, 1, 1, 2 * d, ctx, 0.0, true));
    for (int i = 0; i < 9; ++i) {
        const int k = i == 8 ? 1 : 3;
        s.layers.push_back(make_layer(kContextFirst + i, K::conv, k, 1, kContextDilationH[i],
                                      kContextDilationW[i], ctx, ctx, 0.25, true));
    }
    s.layers.push_back(make_layer(15, K::transposed_conv, 4, 2, 1, 1, ctx, 2 * d, 0.0, true));
    s.layers.push_back(make_layer(16, K::conv, 3, 1, 1, 1, 2 * d, 2 * d, 0.0, true));
    s.layers.push_back(make_layer(17, K::transposed_conv, 4, 2, 1, 1, 2 * d, d, 0.0, true));
    s.layers.push_back(make_layer(18, K::conv, 3, 1, 1, 1, d, d, 0.0, true));
    s.layers.push_back(make_layer(19, K::transposed_conv, 4, 2, 1, 1, d, d, 0.0, true));
    s.layers.push_back(make_layer(20, K::conv, 3, 1, 1, 1, d, d, 0.0, true));
    s.layers.push_back(make_layer(21, K::conv, 3, 1, 1, 1, d, num_classes, 0.0, false));
    return s;
}

void validate_spec(const NetworkSpec& spec, int input_channels)
{
    if (static_cast<int>(spec.layers.size()) != kNumLayers) {
        throw SpecError("network must have " + std::to_string(kNumLayers) + " layers, got " +
                        std::to_string(spec.layers.size()));
    }
    if (spec.num_classes < 1) {
        throw SpecError("num_classes must be positive");
    }
    const int context_maps = 4 * spec.first_layer_feature_maps;
    int transposed = 0;
    int prev_out = input_channels;
    for (int i = 1; i <= kNumLayers; ++i) {
        const LayerSpec& l = spec.layer(i);
        if (l.index != i) {
            spec_fail(i, "index field is " + std::to_string(l.index));
        }
        if (l.kernel_h < 1 || l.kernel_w < 1 || l.stride < 1 || l.dilation_h < 1 ||
            l.dilation_w < 1 || l.pad_h < 0 || l.pad_w < 0 || l.in_channels < 1 || l.out_channels < 1) {
            spec_fail(i, "non-positive geometry or channel count");
        }
        if (l.in_channels != prev_out) {
            spec_fail(i, "expects " + std::to_string(l.in_channels) + " input channels but receives " +
                             std::to_string(prev_out));
        }
        prev_out = l.out_channels;
        if (!(l.dropout_p >= 0.0 && l.dropout_p < 1.0)) {
            spec_fail(i, "dropout probability outside [0, 1)");
        }
        if (!is_context(i) && l.dropout_p != 0.0) {
            spec_fail(i, "spatial dropout is only allowed inside the context module");
        }
        if (l.kind == LayerKind::conv && l.stride != 1) {
            spec_fail(i, "plain convolution must have stride 1");
        }
        if (l.kind != LayerKind::conv && l.stride < 2) {
            spec_fail(i, "strided and transposed layers need stride >= 2");
        }
        if (i == 1 && l.out_channels != spec.first_layer_feature_maps) {
            spec_fail(i, "output channels must equal first_layer_feature_maps");
        }
        if (i <= kEncoderLast && l.kind == LayerKind::transposed_conv) {
            spec_fail(i, "encoder layers cannot be transposed");
        }
        if (is_context(i)) {
            const int c = i - kContextFirst;
            const int want_k = i == kContextLast ? 1 : 3;
            if (l.kind != LayerKind::conv || l.kernel_h != want_k || l.kernel_w != want_k) {
                spec_fail(i, "context layer must be a " + std::to_string(want_k) + "x" +
                                 std::to_string(want_k) + " stride-1 convolution");
            }
            if (i != kContextLast &&
                (l.dilation_h != kContextDilationH[c] || l.dilation_w != kContextDilationW[c])) {
                spec_fail(i, "context dilation (" + std::to_string(l.dilation_h) + ", " +
                                 std::to_string(l.dilation_w) + ") differs from (" +
                                 std::to_string(kContextDilationH[c]) + ", " +
                                 std::to_string(kContextDilationW[c]) + ")");
            }
            if (l.out_channels != context_maps) {
                spec_fail(i, "context module must have " + std::to_string(context_maps) +
                                 " feature maps (4 x first-layer width)");
            }
            if (l.pad_h != l.dilation_h * (l.kernel_h - 1) / 2 || l.pad_w != l.dilation_w * (l.kernel_w - 1) / 2) {
                spec_fail(i, "context padding must preserve height and width");
            }
        }
        if (i > kContextLast && i <= kDecoderLast && l.kind == LayerKind::strided_conv) {
            spec_fail(i, "decoder layers cannot downsample");
        }
        if (l.kind == LayerKind::transposed_conv) {
            if (i <= kContextLast || i > kDecoderLast) {
                spec_fail(i, "transposed convolutions belong to layers 15..20");
            }
            ++transposed;
        }
        if (i == kNumLayers) {
            if (l.kind != LayerKind::conv) {
                spec_fail(i, "output layer must be a plain convolution");
            }
            if (l.out_channels != spec.num_classes) {
                spec_fail(i, "output layer must produce num_classes channels");
            }
        }
    }
    if (transposed != 3) {
        throw SpecError("decoder must contain exactly 3 transposed layers, found " + std::to_string(transposed));
    }
    const int f = downsampling_factor(spec);
    for (int mult : {3, 5}) {
        const int extent = f * mult;
        if (propagate_extent(spec, extent, true) != extent || propagate_extent(spec, extent, false) != extent) {
            throw SpecError("network does not map a " + std::to_string(extent) +
                            "-pixel axis back to its own size");
        }
    }
}

int downsampling_factor(const NetworkSpec& spec)
{
    int f = 1;
    for (const LayerSpec& l : spec.layers) {
        if (l.kind == LayerKind::strided_conv) {
            f *= l.stride;
        }
    }
    return f;
}

std::vector<ReceptiveField> receptive_field_sequence(const NetworkSpec& spec, int from_layer, int to_layer)
{
    if (from_layer < 1 || to_layer > static_cast<int>(spec.layers.size()) || from_layer > to_layer) {
        throw DomainError("receptive_field: layer range [" + std::to_string(from_layer) + ", " +
                          std::to_string(to_layer) + "] invalid");
    }
    // rf in units of from_layer input pixels; jump may become fractional after
    // transposed layers, so it is tracked as a double.
    double rf_h = 1.0;
    double rf_w = 1.0;
    double jump_h = 1.0;
    double jump_w = 1.0;
    std::vector<ReceptiveField> seq;
    for (int i = from_layer; i <= to_layer; ++i) {
        const LayerSpec& l = spec.layer(i);
        if (l.kind == LayerKind::transposed_conv) {
            const double taps_h = std::ceil(static_cast<double>((l.kernel_h - 1) * l.dilation_h + 1) / l.stride);
            const double taps_w = std::ceil(static_cast<double>((l.kernel_w - 1) * l.dilation_w + 1) / l.stride);
            rf_h += (taps_h - 1.0) * jump_h;
            rf_w += (taps_w - 1.0) * jump_w;
            jump_h /= l.stride;
            jump_w /= l.stride;
        } else {
            rf_h += static_cast<double>(l.kernel_h - 1) * l.dilation_h * jump_h;
            rf_w += static_cast<double>(l.kernel_w - 1) * l.dilation_w * jump_w;
            jump_h *= l.stride;
            jump_w *= l.stride;
        }
        seq.push_back({std::lround(std::ceil(rf_h)), std::lround(std::ceil(rf_w))});
    }
    return seq;
}

ReceptiveField receptive_field(const NetworkSpec& spec, int from_layer, int to_layer)
{
    return receptive_field_sequence(spec, from_layer, to_layer).back();
}

Layer::Layer(const LayerSpec& spec)
    : spec_(spec),
      params_(make_conv_params(spec.in_channels, spec.out_channels, spec.kernel_h, spec.kernel_w,
                               spec.stride, spec.dilation_h, spec.dilation_w, spec.pad_h, spec.pad_w,
                               spec.kind == LayerKind::transposed_conv))
{
    params_.weights.ensure_grad();
    params_.bias.ensure_grad();
}

void Layer::initialize(RngState& rng)
{
    he_uniform_init(params_, rng);
}

Tensor Layer::forward(const Tensor& input, bool training, RngState& rng, bool record)
{
    ConvCache* cache = record ? &cache_ : nullptr;
    if (!record) {
        cache_.valid = false;
    }
    Tensor y = spec_.kind == LayerKind::transposed_conv ? transposed_conv2d(input, params_, cache)
                                                        : conv2d(input, params_, cache);
    if (spec_.has_elu) {
        y = elu(y);
        if (record) {
            activation_ = y;
        }
    }
    if (spec_.dropout_p > 0.0) {
        DropoutResult d = spatial_dropout(y, spec_.dropout_p, rng, training);
        dropout_scale_ = std::move(d.channel_scale);
        y = std::move(d.output);
    } else {
        dropout_scale_.clear();
    }
    return y;
}

Tensor Layer::backward(const Tensor& grad_out)
{
    Tensor g = grad_out;
    if (spec_.dropout_p > 0.0) {
        g = spatial_dropout_backward(g, dropout_scale_);
    }
    if (spec_.has_elu) {
        g = elu_backward(g, activation_);
    }
    ConvGrads grads = spec_.kind == LayerKind::transposed_conv
                          ? transposed_conv2d_backward(g, cache_, params_)
                          : conv2d_backward(g, cache_, params_);
    auto wg = params_.weights.grad();
    for (std::size_t i = 0; i < wg.size(); ++i) {
        wg[i] += grads.grad_weights[i];
    }
    auto bg = params_.bias.grad();
    for (std::size_t i = 0; i < bg.size(); ++i) {
        bg[i] += grads.grad_bias[i];
    }
    return std::move(grads.grad_input);
}

void Layer::zero_grad()
{
    params_.weights.zero_grad();
    params_.bias.zero_grad();
}

std::string to_string(FusionMode mode)
{
    switch (mode) {
    case FusionMode::single: return "single";
    case FusionMode::early: return "early";
    case FusionMode::late: return "late";
    case FusionMode::cross: return "cross";
    }
    return "unknown";
}

std::string to_string(Modality modality)
{
    return modality == Modality::zyx ? "zyx" : "rgb";
}

FusionMode parse_fusion_mode(const std::string& text)
{
    if (text == "single") return FusionMode::single;
    if (text == "early") return FusionMode::early;
    if (text == "late") return FusionMode::late;
    if (text == "cross") return FusionMode::cross;
    throw ParseError("unknown fusion mode '" + text + "'");
}

Modality parse_modality(const std::string& text)
{
    if (text == "zyx") return Modality::zyx;
    if (text == "rgb") return Modality::rgb;
    throw ParseError("unknown modality '" + text + "'");
}

FusionNetwork::FusionNetwork(FusionMode mode, Modality single_modality, const NetworkSpec& spec)
    : mode_(mode), modality_(single_modality), spec_(spec)
{
    const int input_channels = mode == FusionMode::early ? 6 : 3;
    spec_.layer(1).in_channels = input_channels;
    validate_spec(spec_, input_channels);

    const int branch_layers = mode == FusionMode::late ? kDecoderLast : kNumLayers;
    const int n_branches = (mode == FusionMode::late || mode == FusionMode::cross) ? 2 : 1;
    for (int b = 0; b < n_branches; ++b) {
        std::vector<Layer> layers;
        layers.reserve(static_cast<std::size_t>(branch_layers));
        for (int i = 1; i <= branch_layers; ++i) {
            layers.emplace_back(spec_.layer(i));
        }
        branches_.push_back(std::move(layers));
    }
    if (mode == FusionMode::late) {
        LayerSpec fusion = spec_.layer(kNumLayers);
        fusion.in_channels *= 2;
        late_fusion_.emplace(fusion);
    }
    if (mode == FusionMode::cross) {
        cross_.emplace();
        cross_->a.ensure_grad();
        cross_->b.ensure_grad();
    }
}

bool FusionNetwork::requires_rgb() const
{
    return mode_ != FusionMode::single || modality_ == Modality::rgb;
}

bool FusionNetwork::requires_zyx() const
{
    return mode_ != FusionMode::single || modality_ == Modality::zyx;
}

void FusionNetwork::initialize(RngState& rng)
{
    for (auto& b : branches_) {
        for (Layer& l : b) {
            l.initialize(rng);
        }
    }
    if (late_fusion_) {
        late_fusion_->initialize(rng);
    }
    if (cross_) {
        cross_->a.fill(0.0);
        cross_->b.fill(0.0);
    }
}

Tensor FusionNetwork::run_branch(std::vector<Layer>& layers, Tensor x, int first, int last,
                                 bool training, RngState& rng, bool record)
{
    for (int i = first; i <= last; ++i) {
        x = layers[static_cast<std::size_t>(i - 1)].forward(x, training, rng, record);
    }
    return x;
}

Tensor FusionNetwork::back_branch(std::vector<Layer>& layers, Tensor g, int first, int last)
{
    for (int i = last; i >= first; --i) {
        g = layers[static_cast<std::size_t>(i - 1)].backward(g);
    }
    return g;
}

Tensor FusionNetwork::forward(const ModalInputs& inputs, bool training, RngState& rng, bool record)
{
    if (requires_rgb() && inputs.rgb == nullptr) {
        throw ContractError(to_string(mode_) + " network requires an RGB input");
    }
    if (requires_zyx() && inputs.zyx == nullptr) {
        throw ContractError(to_string(mode_) + " network requires a ZYX input");
    }
    const Tensor* ref = requires_zyx() ? inputs.zyx : inputs.rgb;
    const Shape rs = ref->shape();
    for (const Tensor* t : {requires_rgb() ? inputs.rgb : nullptr, requires_zyx() ? inputs.zyx : nullptr}) {
        if (t == nullptr) {
            continue;
        }
        const Shape s = t->shape();
        if (s.n != rs.n || s.h != rs.h || s.w != rs.w) {
            throw ContractError("modal inputs differ in size: " + s.str() + " vs " + rs.str());
        }
        if (s.c != 3) {
            throw ContractError("modal input must have 3 channels, got " + s.str());
        }
    }

    const int f = downsampling_factor(spec_);
    in_h_ = rs.h;
    in_w_ = rs.w;
    padded_h_ = (rs.h + f - 1) / f * f;
    padded_w_ = (rs.w + f - 1) / f * f;
    auto prep = [&](const Tensor* t) { return pad_spatial(*t, padded_h_, padded_w_); };

    Tensor logits;
    switch (mode_) {
    case FusionMode::single: {
        const Tensor* in = modality_ == Modality::zyx ? inputs.zyx : inputs.rgb;
        logits = run_branch(branches_[0], prep(in), 1, kNumLayers, training, rng, record);
        break;
    }
    case FusionMode::early: {
        Tensor x = concat_channels(prep(inputs.rgb), prep(inputs.zyx));
        logits = run_branch(branches_[0], std::move(x), 1, kNumLayers, training, rng, record);
        break;
    }
    case FusionMode::late: {
        Tensor lid = run_branch(branches_[0], prep(inputs.zyx), 1, kDecoderLast, training, rng, record);
        Tensor cam = run_branch(branches_[1], prep(inputs.rgb), 1, kDecoderLast, training, rng, record);
        logits = late_fusion_->forward(concat_channels(lid, cam), training, rng, record);
        break;
    }
    case FusionMode::cross: {
        Tensor lid_in = prep(inputs.zyx);
        Tensor cam_in = prep(inputs.rgb);
        cross_lid_out_.assign(kCrossConnections, Tensor());
        cross_cam_out_.assign(kCrossConnections, Tensor());
        for (int j = 1; j <= kNumLayers; ++j) {
            Tensor lid = branches_[0][static_cast<std::size_t>(j - 1)].forward(lid_in, training, rng, record);
            Tensor cam = branches_[1][static_cast<std::size_t>(j - 1)].forward(cam_in, training, rng, record);
            if (j == kNumLayers) {
                logits = add(lid, cam);
                break;
            }
            lid_in = add(lid, cam, cross_->a_at(j));
            cam_in = add(cam, lid, cross_->b_at(j));
            if (record) {
                cross_lid_out_[static_cast<std::size_t>(j - 1)] = std::move(lid);
                cross_cam_out_[static_cast<std::size_t>(j - 1)] = std::move(cam);
            }
        }
        break;
    }
    }
    recorded_ = record;
    return crop_spatial(logits, in_h_, in_w_);
}

InputGrads FusionNetwork::backward(const Tensor& grad_logits)
{
    if (!recorded_) {
        throw StaleStateError("FusionNetwork::backward: no recorded forward pass");
    }
    const Shape gs = grad_logits.shape();
    if (gs.h != in_h_ || gs.w != in_w_ || gs.c != spec_.num_classes) {
        throw StaleStateError("FusionNetwork::backward: gradient " + gs.str() +
                              " does not match the last forward pass");
    }
    Tensor g = pad_spatial(grad_logits, padded_h_, padded_w_);
    InputGrads out;
    auto crop = [&](const Tensor& t) { return crop_spatial(t, in_h_, in_w_); };

    switch (mode_) {
    case FusionMode::single: {
        Tensor gi = back_branch(branches_[0], std::move(g), 1, kNumLayers);
        (modality_ == Modality::zyx ? out.zyx : out.rgb) = crop(gi);
        break;
    }
    case FusionMode::early: {
        Tensor gi = back_branch(branches_[0], std::move(g), 1, kNumLayers);
        auto [grgb, gzyx] = split_channels(gi, 3);
        out.rgb = crop(grgb);
        out.zyx = crop(gzyx);
        break;
    }
    case FusionMode::late: {
        Tensor gcat = late_fusion_->backward(g);
        auto [glid, gcam] = split_channels(gcat, spec_.layer(kDecoderLast).out_channels);
        out.zyx = crop(back_branch(branches_[0], std::move(glid), 1, kDecoderLast));
        out.rgb = crop(back_branch(branches_[1], std::move(gcam), 1, kDecoderLast));
        break;
    }
    case FusionMode::cross: {
        // g_lid / g_cam: gradients w.r.t. the inputs of layer j + 1.
        Tensor g_lid = branches_[0][kNumLayers - 1].backward(g);
        Tensor g_cam = branches_[1][kNumLayers - 1].backward(g);
        auto ga = cross_->a.grad();
        auto gb = cross_->b.grad();
        for (int j = kCrossConnections; j >= 1; --j) {
            const Tensor& lid = cross_lid_out_[static_cast<std::size_t>(j - 1)];
            const Tensor& cam = cross_cam_out_[static_cast<std::size_t>(j - 1)];
            ga[static_cast<std::size_t>(j - 1)] += dot(g_lid, cam);
            gb[static_cast<std::size_t>(j - 1)] += dot(g_cam, lid);
            Tensor g_lid_out = add(g_lid, g_cam, cross_->b_at(j));
            Tensor g_cam_out = add(g_cam, g_lid, cross_->a_at(j));
            g_lid = branches_[0][static_cast<std::size_t>(j - 1)].backward(g_lid_out);
            g_cam = branches_[1][static_cast<std::size_t>(j - 1)].backward(g_cam_out);
        }
        out.zyx = crop(g_lid);
        out.rgb = crop(g_cam);
        break;
    }
    }
    return out;
}

std::vector<ParamView> FusionNetwork::parameters()
{
    std::vector<ParamView> views;
    auto add_layer = [&views](Layer& l, const std::string& prefix) {
        ConvParams& p = l.params();
        views.push_back({prefix + ".weight", p.weights.data(), p.weights.grad(), true});
        views.push_back({prefix + ".bias", p.bias.data(), p.bias.grad(), true});
    };
    const bool dual = branches_.size() == 2;
    for (std::size_t b = 0; b < branches_.size(); ++b) {
        const std::string name = dual ? (b == 0 ? "lid" : "cam") : "net";
        for (std::size_t i = 0; i < branches_[b].size(); ++i) {
            add_layer(branches_[b][i], name + ".L" + std::to_string(i + 1));
        }
    }
    if (late_fusion_) {
        add_layer(*late_fusion_, "fusion.L21");
    }
    if (cross_) {
        views.push_back({"cross.a", cross_->a.data(), cross_->a.grad(), false});
        views.push_back({"cross.b", cross_->b.data(), cross_->b.grad(), false});
    }
    return views;
}

void FusionNetwork::zero_grad()
{
    for (auto& b : branches_) {
        for (Layer& l : b) {
            l.zero_grad();
        }
    }
    if (late_fusion_) {
        late_fusion_->zero_grad();
    }
    if (cross_) {
        cross_->a.zero_grad();
        cross_->b.zero_grad();
    }
}

std::size_t FusionNetwork::parameter_count() const
{
    std::size_t n = 0;
    for (const auto& b : branches_) {
        for (const Layer& l : b) {
            n += l.parameter_count();
        }
    }
    if (late_fusion_) {
        n += late_fusion_->parameter_count();
    }
    if (cross_) {
        n += cross_->parameter_count();
    }
    return n;
}

FusionNetwork build_base(int input_channels, const NetworkSpec& spec, Modality modality)
{
    if (input_channels != 3) {
        throw SpecError("base network takes a 3-channel ZYX or RGB input, got " +
                        std::to_string(input_channels) + " channels");
    }
    return FusionNetwork(FusionMode::single, modality, spec);
}

FusionNetwork build_early(const NetworkSpec& spec)
{
    return FusionNetwork(FusionMode::early, Modality::zyx, spec);
}

FusionNetwork build_late(const NetworkSpec& spec)
{
    return FusionNetwork(FusionMode::late, Modality::zyx, spec);
}

FusionNetwork build_cross(const NetworkSpec& spec)
{
    return FusionNetwork(FusionMode::cross, Modality::zyx, spec);
}

FusionNetwork build_network(FusionMode mode, Modality single_modality, const NetworkSpec& spec,
                            RngState& rng)
{
    FusionNetwork net = [&] {
        switch (mode) {
        case FusionMode::early: return build_early(spec);
        case FusionMode::late: return build_late(spec);
        case FusionMode::cross: return build_cross(spec);
        case FusionMode::single: break;
        }
        return build_base(3, spec, single_modality);
    }();
    net.initialize(rng);
    return net;
}

std::size_t parameter_count(const FusionNetwork& net)
{
    return net.parameter_count();
}

}  // namespace crossfuse
