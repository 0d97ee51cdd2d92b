#include "hugat/train.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "hugat/optim.hpp"

namespace hugat::train {

using ad::Var;

void LossWeights::validate() const {
    if (alpha < 0 || beta < 0 || gamma < 0) throw Error("loss weights must be non-negative");
    if (std::abs(alpha + beta + gamma - 1.0) > 1e-12)
        throw Error("loss weights must sum to 1");
}

EstimatedOd estimated_od(const Var& z) {
    Var gram = ad::matmul(z, ad::transpose(z));
    Var p_dst = ad::softmax_rows(gram);
    Var p_org = ad::softmax_cols(gram);
    return {p_org, p_dst};
}

Var mobility_loss(const ConditionalTripDistributions& trips, const EstimatedOd& est) {
    return ad::add(ad::kl_div_const(trips.p_org_given_dst, est.p_org_given_dst),
                   ad::kl_div_const(trips.p_dst_given_org, est.p_dst_given_org));
}

Var similarity_loss(const Var& z, const Matrix& target_s) {
    const std::size_t n = z->rows;
    if (target_s.rows() != n || target_s.cols() != n)
        throw ShapeMismatch("similarity target must be N x N");
    Var p = ad::softmax_rows(z);
    Var q = ad::sqrt_clamped(p);
    Var gram = ad::matmul(q, ad::transpose(q));
    Var norms = ad::row_sum(p);  // ||sqrt(p_i)||^2 = sum_k p_ik
    return ad::hellinger_gap_sq(gram, norms, target_s);
}

LossBreakdown total_loss(const Var& z, const RegionTargets& targets, const LossWeights& w) {
    w.validate();
    LossBreakdown out;
    out.chk = checkin_loss(z, targets.s_chk);
    out.land = landuse_loss(z, targets.s_land);
    out.mob = mobility_loss(targets.trips, estimated_od(z));
    out.total = ad::add(ad::add(ad::scalar_mul(out.chk, w.alpha), ad::scalar_mul(out.land, w.beta)),
                        ad::scalar_mul(out.mob, w.gamma));
    return out;
}

TrainResult train(const han::HanContext& ctx, const RegionTargets& targets,
                  const han::HanConfig& han_config, const TrainingConfig& cfg,
                  std::uint64_t seed) {
    if (cfg.epochs < 1) throw Error("epochs must be >= 1");
    if (cfg.lr <= 0) throw Error("lr must be positive");
    cfg.weights.validate();

    std::vector<std::string> names;
    names.reserve(ctx.masks.size());
    for (std::size_t m = 0; m < ctx.masks.size(); ++m)
        names.push_back("mp" + std::to_string(m));

    TrainResult result;
    result.params = han::init_parameters(han_config, names, seed);
    ad::Adam adam(result.params.all(), cfg.lr);

    try {
        for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
            adam.zero_grad();
            auto fwd = han::forward(ctx, result.params);
            auto losses = total_loss(fwd.embeddings, targets, cfg.weights);
            ad::backward(losses.total);
            adam.step();
            result.history.push_back({epoch, losses.chk->scalar(), losses.land->scalar(),
                                      losses.mob->scalar(), losses.total->scalar()});
            result.beta_history.push_back(fwd.beta->val);
        }
        auto fwd = han::forward(ctx, result.params);
        result.embeddings = Matrix(fwd.embeddings->rows, fwd.embeddings->cols);
        result.embeddings.data() = fwd.embeddings->val;
    } catch (const NonFiniteValue& e) {
        throw DivergenceDetected(e.what());
    }
    return result;
}

std::vector<TrainResult> train_replicates(const han::HanContext& ctx,
                                          const RegionTargets& targets,
                                          const han::HanConfig& han_config,
                                          const TrainingConfig& cfg) {
    std::vector<TrainResult> out;
    out.reserve(cfg.replicates);
    for (int r = 0; r < cfg.replicates; ++r)
        out.push_back(train(ctx, targets, han_config, cfg, cfg.seed + static_cast<std::uint64_t>(r)));
    return out;
}

void save_checkpoint(const han::HanParameters& params, const std::string& path) {
    nlohmann::json j;
    for (const auto& [name, var] : params.named()) {
        j[name] = {{"shape", {var->rows, var->cols}}, {"values", var->val}};
    }
    std::ofstream out(path);
    if (!out) throw Error("cannot write checkpoint " + path);
    out << j.dump();
}

void load_checkpoint(han::HanParameters& params, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingFile(path);
    nlohmann::json j;
    in >> j;
    for (auto& [name, var] : params.named()) {
        if (!j.contains(name)) throw Error("checkpoint missing parameter " + name);
        const auto& entry = j.at(name);
        const auto shape = entry.at("shape").get<std::vector<std::size_t>>();
        if (shape.size() != 2 || shape[0] != var->rows || shape[1] != var->cols)
            throw ShapeMismatch("checkpoint parameter " + name);
        var->val = entry.at("values").get<std::vector<double>>();
    }
}

}  // namespace hugat::train
