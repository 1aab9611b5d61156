"""Analysis toolkit on published-style measurement tables.

Given accuracy-vs-N series per diversity layer, the toolkit reports
marginal gains, agents-to-match efficiency, rank correlations between K*
and accuracy, and the correct/wrong-dominant boundary classification.
"""

from masinfo.analysis import (
    RunSummary,
    agents_to_match,
    boundary_classification,
    marginal_gains,
    permutation_test,
    spearman_rho,
)

BASELINE = [(2, 0.6021), (4, 0.6289), (8, 0.6468), (16, 0.6534)]
CANDIDATES = {
    "L2": [(2, 0.6102), (4, 0.6350), (8, 0.6544), (16, 0.6601)],
    "L3": [(2, 0.6412), (4, 0.6729), (8, 0.6980), (16, 0.7154)],
    "L4": [(2, 0.6771), (4, 0.7103), (8, 0.7441), (16, 0.7686)],
}


def summary(workflow, layer, k_star, k_star_c, k_star_w, acc):
    return RunSummary(
        dataset="arc", layer=layer, workflow=workflow, n_agents=4, accuracy=acc,
        k_star=k_star, k_star_c=k_star_c, k_star_w=k_star_w,
        mean_cosine=None, task_count=500,
    )


def main():
    print("== marginal gains collapse for the homogeneous baseline ==")
    for n, gain in marginal_gains(BASELINE):
        print(f"  N={n:>2}: {gain:+.5f} accuracy per added agent")

    print("\n== agents-to-match the baseline at N=16 ==")
    for layer, series in CANDIDATES.items():
        n_match, acc = agents_to_match(BASELINE, series)
        print(f"  {layer}: {n_match} agents reach {acc:.4f} (target 0.6534)")

    print("\n== K* tracks accuracy across configurations ==")
    rows = [
        summary("vote", "L1", 1.201, 1.183, 1.173, 0.813),
        summary("vote", "L2", 1.349, 1.318, 1.222, 0.815),
        summary("vote", "L3", 1.245, 1.223, 1.161, 0.838),
        summary("vote", "L4", 1.521, 1.484, 1.297, 0.875),
        summary("debate", "L1", 1.197, 1.184, 1.177, 0.816),
        summary("debate", "L2", 1.348, 1.315, 1.234, 0.810),
        summary("debate", "L3", 1.246, 1.220, 1.160, 0.833),
        summary("debate", "L4", 1.517, 1.472, 1.288, 0.859),
    ]
    ks = [r.k_star for r in rows]
    acc = [r.accuracy for r in rows]
    print(f"  Spearman rho(K*, accuracy) = {spearman_rho(ks, acc):.3f}")
    report = permutation_test(ks, acc, shuffles=2000, seed=0)
    print(f"  permutation test: r = {report.observed_r:.3f}, p = {report.p_value:.4f}")

    print("\n== boundary classification: K*_c vs K*_w ==")
    entries, skipped = boundary_classification(rows)
    for config, side, tie in entries:
        flag = " (tie)" if tie else ""
        print(f"  {config}: {side}{flag}")


if __name__ == "__main__":
    main()
