#include "dshc/training.hpp"

namespace dshc {

void TrainConfig::validate() const {
    if (!(gamma_min > 0.0) || !(gamma_min < gamma_max)) {
        throw ArgumentError("train: require 0 < gamma_min < gamma_max");
    }
    if (batch_size == 0) throw ArgumentError("train: batch_size must be >= 1");
    if (!(learning_rate >= 0.0)) throw ArgumentError("train: learning_rate must be >= 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
        throw ArgumentError("train: Adam betas must lie in [0, 1)");
    }
    if (!(epsilon > 0.0)) throw ArgumentError("train: epsilon must be positive");
}

}  // namespace dshc
