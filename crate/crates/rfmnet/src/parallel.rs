//! Replica runs spread over a rayon pool. Results are reduced in replica
//! order, so output does not depend on the thread count.

use rayon::prelude::*;
use rayon::ThreadPool;
use rfmnet_core::tasep::{
    aggregate, replica_config, run_tasep, ReplicaSummary, SimStats, TasepConfig,
};

use crate::error::CliError;

pub fn pool(threads: Option<usize>) -> Result<ThreadPool, CliError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        if t == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        b = b.num_threads(t);
    }
    b.build().map_err(|e| CliError::Pool(e.to_string()))
}

/// Runs replicas `0..replicas` and returns each with its seed.
pub fn run_replicas(
    pool: &ThreadPool,
    config: &TasepConfig,
    replicas: usize,
) -> Vec<(u64, rfmnet_core::Result<SimStats>)> {
    pool.install(|| {
        (0..replicas as u64)
            .into_par_iter()
            .map(|k| {
                let c = replica_config(config, k);
                (c.seed, run_tasep(&c))
            })
            .collect()
    })
}

/// Parallel counterpart of `rfmnet_core::tasep::replicate`.
pub fn replicate(
    pool: &ThreadPool,
    config: &TasepConfig,
    replicas: usize,
) -> Result<ReplicaSummary, CliError> {
    config.validate()?;
    if replicas < 2 {
        return Err(CliError::Usage(format!(
            "need at least 2 replicas, got {replicas}"
        )));
    }
    Ok(aggregate(run_replicas(pool, config, replicas))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rfmnet_core::RateProfile;

    #[test]
    fn matches_sequential_for_any_thread_count() {
        let rates = RateProfile::homogeneous(4, 1.0).unwrap();
        let config = TasepConfig {
            burn_in_cycles: 2_000,
            ..TasepConfig::new(rates, 20_000, 9)
        };
        let sequential = rfmnet_core::tasep::replicate(&config, 6).unwrap();
        for t in [1, 3] {
            let p = pool(Some(t)).unwrap();
            assert_eq!(replicate(&p, &config, 6).unwrap(), sequential);
        }
    }
}
