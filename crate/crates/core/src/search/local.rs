use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{sample_table, table_neighbours, Run, SearchConfig, SearchResult};
use crate::error::Result;
use crate::prefix_tree::PrefixTree;

/// Steepest-descent local search with random restarts.
///
/// Each outer step samples a fresh machine; the inner loop moves to the
/// cheapest neighbour while that strictly improves the current cost. The
/// iteration counter advances once per inner step and the search stops once
/// it exceeds `t_max` (or the wall-clock limit is hit).
pub fn local_search(tree: &PrefixTree, cfg: &SearchConfig) -> Result<SearchResult> {
    let mut run = Run::new(tree, cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let num_syms = tree.sigma().len();
    let mut t = 0;
    let mut samples = 0usize;
    while t <= cfg.t_max && !run.out_of_time() {
        let mut current = sample_table(num_syms, cfg.u_max, cfg.compressed_mode, &mut rng);
        let mut cost = run.cost(&current);
        samples += 1;
        run.offer(&current, cost);
        run.record(t, cost, samples - 1);
        let mut previous = f64::INFINITY;
        while t <= cfg.t_max && cost < previous && !run.out_of_time() {
            t += 1;
            previous = cost;
            let candidates = table_neighbours(&current, cfg.compressed_mode);
            let costs = run.costs(&candidates);
            let mut chosen = None;
            for (i, &c) in costs.iter().enumerate() {
                if c < cost {
                    cost = c;
                    chosen = Some(i);
                }
            }
            if let Some(i) = chosen {
                current = candidates
                    .into_iter()
                    .nth(i)
                    .expect("index from the same list");
                run.offer(&current, cost);
            }
            run.record(t, cost, samples - 1);
        }
    }
    Ok(run.finish(t, samples.saturating_sub(1)))
}
