#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hugat/ad.hpp"
#include "hugat/han.hpp"
#include "hugat/targets.hpp"

namespace hugat::train {

struct LossWeights {
    double alpha = 0.3;  // check-in
    double beta = 0.6;   // land use
    double gamma = 0.1;  // mobility

    void validate() const;
};

struct TrainingConfig {
    int epochs = 1000;
    double lr = 1e-3;
    std::uint64_t seed = 0;
    int replicates = 5;
    LossWeights weights;
};

struct EstimatedOd {
    ad::Var p_org_given_dst;  // columns sum to 1
    ad::Var p_dst_given_org;  // rows sum to 1
};

EstimatedOd estimated_od(const ad::Var& z);

// KL(p || p_hat) summed over both conditional directions.
ad::Var mobility_loss(const ConditionalTripDistributions& trips, const EstimatedOd& est);

// Squared error between the target Hellinger matrix and the Hellinger matrix
// of softmax(z_i), over ordered pairs i != j.
ad::Var similarity_loss(const ad::Var& z, const Matrix& target_s);

inline ad::Var checkin_loss(const ad::Var& z, const SimilarityMatrix& s_chk) {
    return similarity_loss(z, s_chk.S);
}
inline ad::Var landuse_loss(const ad::Var& z, const SimilarityMatrix& s_land) {
    return similarity_loss(z, s_land.S);
}

struct LossBreakdown {
    ad::Var total, chk, land, mob;
};

LossBreakdown total_loss(const ad::Var& z, const RegionTargets& targets, const LossWeights& w);

struct LossRecord {
    int epoch;
    double chk, land, mob, total;
};

struct TrainResult {
    han::HanParameters params;
    Matrix embeddings;                           // N x d final Z
    std::vector<LossRecord> history;             // one per epoch
    std::vector<std::vector<double>> beta_history;  // per-epoch semantic weights
};

TrainResult train(const han::HanContext& ctx, const RegionTargets& targets,
                  const han::HanConfig& han_config, const TrainingConfig& cfg,
                  std::uint64_t seed);

// seeds seed .. seed + replicates - 1
std::vector<TrainResult> train_replicates(const han::HanContext& ctx,
                                          const RegionTargets& targets,
                                          const han::HanConfig& han_config,
                                          const TrainingConfig& cfg);

void save_checkpoint(const han::HanParameters& params, const std::string& path);
void load_checkpoint(han::HanParameters& params, const std::string& path);

}  // namespace hugat::train
