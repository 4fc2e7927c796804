// Fits single, joint and fleet transition models for a three-car mountain-car
// fleet and compares their accuracy on held-out target transitions.

#include <fleetgp/harness/experiment.hpp>

#include <cstdio>

using namespace fleetgp;
using namespace fleetgp::harness;

int main()
{
    const std::vector<double> powers{0.0015, 0.001, 0.0001};
    const std::vector<int> samples{20, 100, 100};
    coreg::FleetDataset data(3, 3, 2);
    for (int m = 0; m < 3; ++m) {
        const envs::MountainCar car(powers[m]);
        envs::normalize_batch(car, envs::sample_batch(car, samples[m], mix_seed(7, m)), data.member(m).inputs, data.member(m).targets);
    }

    const envs::MountainCar target(powers[0]);
    Matrix X, Y;
    envs::normalize_batch(target, envs::sample_batch(target, 1000, 99), X, Y);

    gprl::TransitionFitOptions opt;
    opt.restarts = 3;
    opt.seed = 1;
    for (auto type : {TargetType::single, TargetType::joint, TargetType::fleet}) {
        const auto built = build_transition_model(data, type, 0, opt);
        Matrix mean, var;
        built.model->predict(X, mean, var);
        const Vector rmse = (mean - Y).array().square().colwise().mean().sqrt();
        std::printf("%-6s rmse position %.2e velocity %.2e\n", to_string(type).c_str(), rmse[0], rmse[1]);
        for (std::size_t d = 0; d < built.correlations.size(); ++d)
            std::printf("       dim %zu corr(T, SA) %+.3f corr(T, SB) %+.3f\n", d, built.correlations[d](0, 1), built.correlations[d](0, 2));
    }
}
