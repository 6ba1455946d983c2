#pragma once

namespace adnet {

template <class Fn>
void for_each_eval_sample(const ProblemInstance& p, int agent, Fn&& fn) {
    const auto& model = p.logistic_agents.at(static_cast<std::size_t>(agent));
    const auto key = p.shared_model ? 0u : static_cast<std::uint64_t>(agent);
    AgentStream s(make_stream({stream::kEvaluation, p.seed, key}));
    Sample x;
    for (std::size_t n = 0; n < p.eval_sample_count; ++n) {
        draw_logistic_sample(model, s, x);
        fn(static_cast<const Sample&>(x));
    }
}

}  // namespace adnet
