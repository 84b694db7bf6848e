#include "rsb/learner.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <numeric>
#include <ostream>

namespace rsb {

namespace {

constexpr char kMagic[4] = {'R', 'S', 'B', 'M'};
constexpr std::uint32_t kCheckpointVersion = 1;

template <typename T>
void write_le(std::ostream& out, T value) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T read_le(std::istream& in) {
    unsigned char bytes[sizeof(T)];
    if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw ParseError(0, "truncated checkpoint");
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
}

// log(sum exp) - z_y, and softmax probabilities.
double cross_entropy(const std::array<double, kNumLabels>& logits, Label y,
                     std::array<double, kNumLabels>& probs) {
    const double zmax = std::max(logits[0], logits[1]);
    double sum = 0.0;
    for (int k = 0; k < kNumLabels; ++k) {
        probs[k] = std::exp(logits[k] - zmax);
        sum += probs[k];
    }
    for (auto& p : probs) p /= sum;
    return std::log(sum) + zmax - logits[y];
}

}  // namespace

void ClassifierSpec::validate() const {
    if (input_dim == 0) throw ConfigError("classifier input_dim must be positive");
    for (auto h : hidden_sizes) {
        if (h == 0) throw ConfigError("hidden layer sizes must be positive");
    }
    if (!(learning_rate >= 0.0)) throw ConfigError("learning rate must be non-negative");
    if (epochs_per_batch == 0) throw ConfigError("epochs_per_batch must be positive");
    if (minibatch_size == 0) throw ConfigError("minibatch_size must be positive");
}

// ---------------------------------------------------------------------------
// Mlp
// ---------------------------------------------------------------------------

Mlp::Mlp(ClassifierSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    std::vector<std::size_t> dims{spec_.input_dim};
    dims.insert(dims.end(), spec_.hidden_sizes.begin(), spec_.hidden_sizes.end());
    dims.push_back(kNumLabels);
    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        Layer layer{dims[l], dims[l + 1], offset, offset + dims[l] * dims[l + 1]};
        offset = layer.bias_offset + layer.out;
        layers_.push_back(layer);
    }
    params_.assign(offset, 0.0);
    m_.assign(offset, 0.0);
    v_.assign(offset, 0.0);
}

Mlp::Mlp(ClassifierSpec spec, Rng& init_rng) : Mlp(std::move(spec)) {
    for (const auto& layer : layers_) {
        const double limit = std::sqrt(6.0 / static_cast<double>(layer.in));
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (std::size_t i = 0; i < layer.in * layer.out; ++i)
            params_[layer.weight_offset + i] = dist(init_rng.engine());
    }
}

Mlp Mlp::zeros(ClassifierSpec spec) { return Mlp(std::move(spec)); }

std::vector<std::size_t> Mlp::layer_dims() const {
    std::vector<std::size_t> dims{layers_.front().in};
    for (const auto& l : layers_) dims.push_back(l.out);
    return dims;
}

void Mlp::forward(const FeatureVector& x, std::vector<std::vector<double>>& activations,
                  std::array<double, kNumLabels>& logits) const {
    activations.resize(layers_.size());
    activations[0] = x;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const Layer& layer = layers_[l];
        const bool last = l + 1 == layers_.size();
        const double* w = params_.data() + layer.weight_offset;
        const double* b = params_.data() + layer.bias_offset;
        const std::vector<double>& in = activations[l];
        double* out;
        if (last) {
            out = logits.data();
        } else {
            activations[l + 1].resize(layer.out);
            out = activations[l + 1].data();
        }
        for (std::size_t o = 0; o < layer.out; ++o) {
            double z = b[o];
            const double* row = w + o * layer.in;
            for (std::size_t i = 0; i < layer.in; ++i) z += row[i] * in[i];
            out[o] = last ? z : std::max(z, 0.0);
        }
    }
}

Mlp::Prediction Mlp::predict(const FeatureVector& x) const {
    validate_features(x, spec_.input_dim);
    std::vector<std::vector<double>> acts;
    std::array<double, kNumLabels> logits{};
    forward(x, acts, logits);
    Prediction p;
    cross_entropy(logits, 0, p.probabilities);
    p.label = p.probabilities[1] > p.probabilities[0] ? 1 : 0;
    return p;
}

double Mlp::loss(std::span<const LabeledInstance> batch) const {
    std::vector<std::vector<double>> acts;
    std::array<double, kNumLabels> logits{}, probs{};
    double total = 0.0;
    for (const auto& inst : batch) {
        validate_features(inst.features, spec_.input_dim);
        forward(inst.features, acts, logits);
        total += cross_entropy(logits, inst.label, probs);
    }
    return total;
}

double Mlp::loss_and_gradient(std::span<const LabeledInstance> batch,
                              std::vector<double>& grad) const {
    grad.assign(params_.size(), 0.0);
    std::vector<std::vector<double>> acts;
    std::array<double, kNumLabels> logits{}, probs{};
    std::vector<double> delta, prev_delta;
    double total = 0.0;

    for (const auto& inst : batch) {
        validate_features(inst.features, spec_.input_dim);
        forward(inst.features, acts, logits);
        total += cross_entropy(logits, inst.label, probs);

        delta.assign(probs.begin(), probs.end());
        delta[inst.label] -= 1.0;

        for (std::size_t l = layers_.size(); l-- > 0;) {
            const Layer& layer = layers_[l];
            const std::vector<double>& in = acts[l];
            double* gw = grad.data() + layer.weight_offset;
            double* gb = grad.data() + layer.bias_offset;
            for (std::size_t o = 0; o < layer.out; ++o) {
                const double d = delta[o];
                gb[o] += d;
                if (d == 0.0) continue;
                double* row = gw + o * layer.in;
                for (std::size_t i = 0; i < layer.in; ++i) row[i] += d * in[i];
            }
            if (l == 0) break;
            const double* w = params_.data() + layer.weight_offset;
            prev_delta.assign(layer.in, 0.0);
            for (std::size_t o = 0; o < layer.out; ++o) {
                const double d = delta[o];
                if (d == 0.0) continue;
                const double* row = w + o * layer.in;
                for (std::size_t i = 0; i < layer.in; ++i) prev_delta[i] += row[i] * d;
            }
            // ReLU derivative; the stored activation is zero where the unit was off.
            for (std::size_t i = 0; i < layer.in; ++i) {
                if (in[i] <= 0.0) prev_delta[i] = 0.0;
            }
            delta.swap(prev_delta);
        }
    }
    return total;
}

void Mlp::apply_gradient(const std::vector<double>& grad) {
    const double lr = spec_.learning_rate;
    if (!spec_.adaptive_moments) {
        for (std::size_t i = 0; i < params_.size(); ++i) params_[i] -= lr * grad[i];
        return;
    }
    ++step_;
    const double b1 = spec_.beta1, b2 = spec_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
        m_[i] = b1 * m_[i] + (1.0 - b1) * grad[i];
        v_[i] = b2 * v_[i] + (1.0 - b2) * grad[i] * grad[i];
        const double m_hat = m_[i] / c1;
        const double v_hat = v_[i] / c2;
        params_[i] -= lr * m_hat / (std::sqrt(v_hat) + spec_.epsilon);
    }
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

namespace {

void shuffle_indices(std::vector<std::size_t>& idx, Rng& rng) {
    for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.index(i)]);
}

double train_epochs(Mlp& model, std::span<const LabeledInstance> data, const ReplayMemory* memory,
                    Rng& learner_rng, Rng* replay_rng, TrainRecord& record,
                    std::size_t batch_index) {
    const auto& spec = model.spec();
    std::vector<std::size_t> order(data.size());
    std::vector<LabeledInstance> step_batch;
    std::vector<double> grad;
    double last = 0.0;

    for (std::size_t epoch = 0; epoch < spec.epochs_per_batch; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        shuffle_indices(order, learner_rng);
        double epoch_loss = 0.0;
        std::size_t epoch_count = 0;

        for (std::size_t start = 0; start < order.size(); start += spec.minibatch_size) {
            const std::size_t end = std::min(order.size(), start + spec.minibatch_size);
            step_batch.clear();
            for (std::size_t i = start; i < end; ++i) step_batch.push_back(data[order[i]]);
            if (memory != nullptr) {
                ReplayBatch replay = oversample_balance(memory->draw(*replay_rng), *replay_rng);
                record.replay_instances += replay.size();
                step_batch.insert(step_batch.end(), replay.instances.begin(), replay.instances.end());
            }
            const double loss = model.loss_and_gradient(step_batch, grad);
            if (!std::isfinite(loss)) {
                throw Error("non-finite training loss at batch " + std::to_string(batch_index) +
                            ", epoch " + std::to_string(epoch));
            }
            const double scale = 1.0 / static_cast<double>(step_batch.size());
            for (auto& g : grad) g *= scale;
            model.apply_gradient(grad);
            epoch_loss += loss;
            epoch_count += step_batch.size();
            record.instances += end - start;
        }
        last = epoch_count ? epoch_loss / static_cast<double>(epoch_count) : 0.0;
        record.epoch_losses.push_back(last);
    }
    return last;
}

}  // namespace

TrainRecord fit_batch(Mlp& model, std::span<const LabeledInstance> batch, ReplayMemory* memory,
                      bool replay_enabled, Rng& learner_rng, Rng& replay_rng,
                      std::size_t batch_index) {
    if (batch.empty()) throw InvalidValueError("cannot train on an empty batch");
    TrainRecord record;
    record.batch_index = batch_index;
    const bool use_memory = replay_enabled && memory != nullptr;
    if (use_memory) {
        for (const auto& inst : batch) memory->observe(inst);
    }
    train_epochs(model, batch, use_memory ? memory : nullptr, learner_rng,
                 use_memory ? &replay_rng : nullptr, record, batch_index);
    return record;
}

Mlp fit_offline(const ClassifierSpec& spec, std::span<const LabeledInstance> data, Rng& rng) {
    if (data.empty()) throw InvalidValueError("offline training needs data");
    Mlp model(spec, rng);
    TrainRecord record;
    train_epochs(model, data, nullptr, rng, nullptr, record, 0);
    return model;
}

double gradient_check(const Mlp& model, std::span<const LabeledInstance> batch, double step) {
    std::vector<double> analytic;
    model.loss_and_gradient(batch, analytic);
    Mlp probe = model;
    double worst = 0.0;
    for (std::size_t i = 0; i < probe.parameter_count(); ++i) {
        const double original = probe.parameters()[i];
        probe.parameters()[i] = original + step;
        const double up = probe.loss(batch);
        probe.parameters()[i] = original - step;
        const double down = probe.loss(batch);
        probe.parameters()[i] = original;
        const double numeric = (up - down) / (2.0 * step);
        const double denom = std::max(std::abs(analytic[i]) + std::abs(numeric), 1e-6);
        worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
    }
    return worst;
}

Label nearest_centroid_predict(std::span<const ReactiveCentroid> centroids, const FeatureVector& x) {
    return find_nearest(centroids, x).label;
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

void save_model(const Mlp& model, std::ostream& out) {
    const auto dims = model.layer_dims();
    out.write(kMagic, 4);
    write_le<std::uint32_t>(out, kCheckpointVersion);
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(dims.size() - 1));
    for (auto d : dims) write_le<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    for (double p : model.parameters()) write_le<double>(out, p);
    if (!out) throw Error("failed to write checkpoint");
}

Mlp load_model(std::istream& in) {
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
        throw ParseError(0, "checkpoint magic mismatch");
    const auto version = read_le<std::uint32_t>(in);
    if (version != kCheckpointVersion)
        throw ParseError(0, "unsupported checkpoint version " + std::to_string(version));
    const auto n_layers = read_le<std::uint32_t>(in);
    if (n_layers == 0) throw ParseError(0, "checkpoint has no layers");
    std::vector<std::size_t> dims;
    for (std::uint32_t i = 0; i <= n_layers; ++i) dims.push_back(read_le<std::uint32_t>(in));
    if (dims.back() != static_cast<std::size_t>(kNumLabels))
        throw ParseError(0, "checkpoint output layer must have 2 units");

    ClassifierSpec spec;
    spec.input_dim = dims.front();
    spec.hidden_sizes.assign(dims.begin() + 1, dims.end() - 1);
    Mlp model = Mlp::zeros(spec);
    for (auto& p : model.parameters()) p = read_le<double>(in);
    return model;
}

}  // namespace rsb
