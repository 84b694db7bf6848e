#ifndef RSB_LEARNER_HPP
#define RSB_LEARNER_HPP

#include <array>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "rsb/memory.hpp"
#include "rsb/replay.hpp"
#include "rsb/rng.hpp"
#include "rsb/types.hpp"

namespace rsb {

struct ClassifierSpec {
    std::size_t input_dim = 0;
    std::vector<std::size_t> hidden_sizes{64, 32};  // ReLU layers; empty = linear softmax
    double learning_rate = 1e-3;
    bool adaptive_moments = true;  // Adam when true, plain SGD otherwise
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::size_t epochs_per_batch = 10;
    std::size_t minibatch_size = 32;

    void validate() const;
};

struct TrainRecord {
    std::size_t batch_index = 0;
    std::vector<double> epoch_losses;  // mean loss per instance, per epoch
    std::size_t instances = 0;
    std::size_t replay_instances = 0;
};

// Fully connected ReLU network with a 2-way softmax head.
//
// Parameters live in one flat vector, layer by layer: the weight matrix
// (out x in, row-major) followed by the bias vector.
class Mlp {
public:
    struct Prediction {
        Label label = 0;
        std::array<double, kNumLabels> probabilities{};
    };

    // He-uniform weights, zero biases.
    Mlp(ClassifierSpec spec, Rng& init_rng);
    static Mlp zeros(ClassifierSpec spec);

    Prediction predict(const FeatureVector& x) const;
    Label classify(const FeatureVector& x) const { return predict(x).label; }

    // Summed cross-entropy over the batch.
    double loss(std::span<const LabeledInstance> batch) const;
    // Summed cross-entropy; grad is resized to parameter_count() and holds the
    // summed gradient.
    double loss_and_gradient(std::span<const LabeledInstance> batch, std::vector<double>& grad) const;

    // One optimizer step with the given (already averaged) gradient.
    void apply_gradient(const std::vector<double>& grad);

    const ClassifierSpec& spec() const { return spec_; }
    std::vector<std::size_t> layer_dims() const;
    std::size_t parameter_count() const { return params_.size(); }
    std::vector<double>& parameters() { return params_; }
    const std::vector<double>& parameters() const { return params_; }

private:
    struct Layer {
        std::size_t in, out, weight_offset, bias_offset;
    };
    explicit Mlp(ClassifierSpec spec);
    // Fills logits; activations[l] holds the input of layer l (post-ReLU).
    void forward(const FeatureVector& x, std::vector<std::vector<double>>& activations,
                 std::array<double, kNumLabels>& logits) const;

    ClassifierSpec spec_;
    std::vector<Layer> layers_;
    std::vector<double> params_;
    std::vector<double> m_, v_;
    std::uint64_t step_ = 0;
};

// Feeds every raw instance to the memory once (when replay is enabled), then
// trains epochs_per_batch epochs. Each shuffled minibatch is extended with
// oversample_balance(memory.draw()) before a single optimizer step.
// Throws Error if the loss becomes non-finite.
TrainRecord fit_batch(Mlp& model, std::span<const LabeledInstance> batch, ReplayMemory* memory,
                      bool replay_enabled, Rng& learner_rng, Rng& replay_rng,
                      std::size_t batch_index = 0);

// Fresh model trained from scratch on the given data.
Mlp fit_offline(const ClassifierSpec& spec, std::span<const LabeledInstance> data, Rng& rng);

// Max relative error between analytic and central-difference gradients.
double gradient_check(const Mlp& model, std::span<const LabeledInstance> batch, double step = 1e-5);

// Label of the nearest centroid. Throws NotFoundError for an empty set.
Label nearest_centroid_predict(std::span<const ReactiveCentroid> centroids, const FeatureVector& x);

// Flat binary checkpoint: "RSBM", u32 version, u32 layer count, u32 dims
// (layer count + 1), then per layer the row-major weights and the biases as
// little-endian float64.
void save_model(const Mlp& model, std::ostream& out);
Mlp load_model(std::istream& in);

}  // namespace rsb

#endif  // RSB_LEARNER_HPP
