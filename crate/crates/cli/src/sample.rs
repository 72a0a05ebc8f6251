//! CSV dumps of the samplers.

use std::path::PathBuf;
use std::str::FromStr;

use heightfrag::csbp::{csbp_sample_path, CsbpParams};
use heightfrag::report::CsvTable;
use heightfrag::subordinator::{sample_jump_field, ConditionedJumpSampler};
use heightfrag::tree::{first_split_partition, fragment_at_height, GwTreeSampler, SkeletonTable, MAX_SKELETON_LEAVES};
use heightfrag::{Alpha, RngStream};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::report::VERSION;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleKind {
    Jumps,
    ConditionedJumps,
    Skeleton,
    GwTree,
    Fragmentation,
    CsbpPath,
}

impl SampleKind {
    pub const ALL: [SampleKind; 6] = [
        SampleKind::Jumps,
        SampleKind::ConditionedJumps,
        SampleKind::Skeleton,
        SampleKind::GwTree,
        SampleKind::Fragmentation,
        SampleKind::CsbpPath,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SampleKind::Jumps => "jumps",
            SampleKind::ConditionedJumps => "conditioned-jumps",
            SampleKind::Skeleton => "skeleton",
            SampleKind::GwTree => "gw-tree",
            SampleKind::Fragmentation => "fragmentation",
            SampleKind::CsbpPath => "csbp-path",
        }
    }
}

impl FromStr for SampleKind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        SampleKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| CliError::Config {
            field: "kind".into(),
            reason: format!("unknown kind `{s}`, expected one of {}", SampleKind::ALL.map(SampleKind::name).join(", ")),
        })
    }
}

fn rows_jumps(cfg: &RunConfig, al: Alpha, rng: &mut RngStream, t: &mut CsvTable) -> Result<(), CliError> {
    t.push_provenance("x", 1.0);
    t.push_provenance("epsilon", cfg.epsilon);
    for draw in 0..cfg.n_samples {
        let seq = sample_jump_field(al, 1.0, cfg.epsilon, rng)?;
        for (rank, j) in seq.jumps().iter().enumerate() {
            t.push_row(vec![
                draw.to_string(),
                (rank + 1).to_string(),
                j.to_string(),
                seq.residual().to_string(),
                seq.total().to_string(),
            ]);
        }
    }
    Ok(())
}

fn rows_conditioned(cfg: &RunConfig, al: Alpha, rng: &mut RngStream, t: &mut CsvTable) -> Result<(), CliError> {
    let (x, s) = (1.0, 1.0);
    t.push_provenance("x", x);
    t.push_provenance("s", s);
    t.push_provenance("k_max", cfg.k_max);
    t.push_provenance("delta", cfg.delta);
    let sampler = ConditionedJumpSampler::new(al)?;
    for draw in 0..cfg.n_samples {
        let seq = sampler.sample(x, s, cfg.k_max, cfg.delta, rng)?;
        for (rank, j) in seq.jumps().iter().enumerate() {
            t.push_row(vec![
                draw.to_string(),
                (rank + 1).to_string(),
                j.to_string(),
                seq.residual().to_string(),
                seq.total().to_string(),
            ]);
        }
    }
    Ok(())
}

fn rows_skeleton(cfg: &RunConfig, al: Alpha, rng: &mut RngStream, t: &mut CsvTable) -> Result<(), CliError> {
    if !(2..=MAX_SKELETON_LEAVES).contains(&cfg.n_vertices) {
        return Err(CliError::Config {
            field: "n_vertices".into(),
            reason: format!("skeletons need 2 to {MAX_SKELETON_LEAVES} leaves, got {}", cfg.n_vertices),
        });
    }
    t.push_provenance("leaves", cfg.n_vertices);
    let table = SkeletonTable::new(cfg.n_vertices, al)?;
    for draw in 0..cfg.n_samples {
        let (idx, tree) = table.sample(rng);
        t.push_row(vec![
            draw.to_string(),
            idx.to_string(),
            tree.skeleton().to_brackets(),
            first_split_partition(&tree)?.to_string(),
        ]);
    }
    Ok(())
}

fn gw_trees(cfg: &RunConfig, al: Alpha, rng: &mut RngStream, t: &mut CsvTable, by_level: bool) -> Result<(), CliError> {
    t.push_provenance("n_vertices", cfg.n_vertices);
    t.push_provenance("trees", cfg.trees);
    let sampler = GwTreeSampler::new(al);
    for tree in 0..cfg.trees {
        let path = sampler.sample(cfg.n_vertices, rng)?;
        if by_level {
            for level in 0..=path.max_height() {
                let f = fragment_at_height(&path, level);
                t.push_row(vec![
                    tree.to_string(),
                    level.to_string(),
                    f.len().to_string(),
                    f.total().to_string(),
                    f.largest().to_string(),
                ]);
            }
        } else {
            for (v, h) in path.heights().iter().enumerate() {
                t.push_row(vec![tree.to_string(), v.to_string(), h.to_string()]);
            }
        }
    }
    Ok(())
}

fn rows_csbp(cfg: &RunConfig, al: Alpha, rng: &mut RngStream, t: &mut CsvTable) -> Result<(), CliError> {
    let params = CsbpParams::new(al, 1.0)?;
    t.push_provenance("x0", params.x0);
    t.push_provenance("dt", cfg.dt);
    t.push_provenance("t_max", cfg.t_max);
    for p in 0..cfg.n_samples {
        let path = csbp_sample_path(params, cfg.t_max, cfg.dt, rng)?;
        for (time, v) in path.times().zip(&path.values) {
            t.push_row(vec![p.to_string(), time.to_string(), v.to_string()]);
        }
    }
    Ok(())
}

/// Writes `<output_dir>/<kind>_alpha<a>_seed<s>.csv` for every alpha and
/// seed of the config; returns the paths in write order.
pub fn cmd_sample(kind: SampleKind, cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    let columns: &[&str] = match kind {
        SampleKind::Jumps | SampleKind::ConditionedJumps => &["draw", "rank", "magnitude", "residual", "total"],
        SampleKind::Skeleton => &["draw", "shape_index", "shape", "first_split"],
        SampleKind::GwTree => &["tree", "vertex", "height"],
        SampleKind::Fragmentation => &["tree", "level", "fragments", "total_mass", "largest"],
        SampleKind::CsbpPath => &["path", "t", "value"],
    };
    let mut written = Vec::new();
    for &seed in &cfg.seeds {
        for (ai, &a) in cfg.alpha_grid.iter().enumerate() {
            let al = Alpha::new(a)?;
            let mut rng = RngStream::new(seed, ai as u64);
            let mut t = CsvTable::new(columns.iter().copied())
                .provenance("version", VERSION)
                .provenance("config_hash", cfg.hash())
                .provenance("kind", kind.name())
                .provenance("alpha", a)
                .provenance("seed", seed)
                .provenance("stream", ai);
            match kind {
                SampleKind::Jumps => rows_jumps(cfg, al, &mut rng, &mut t)?,
                SampleKind::ConditionedJumps => rows_conditioned(cfg, al, &mut rng, &mut t)?,
                SampleKind::Skeleton => rows_skeleton(cfg, al, &mut rng, &mut t)?,
                SampleKind::GwTree => gw_trees(cfg, al, &mut rng, &mut t, false)?,
                SampleKind::Fragmentation => gw_trees(cfg, al, &mut rng, &mut t, true)?,
                SampleKind::CsbpPath => rows_csbp(cfg, al, &mut rng, &mut t)?,
            }
            let path = cfg.output_dir.join(format!("{}_alpha{a}_seed{seed}.csv", kind.name()));
            t.write(std::io::BufWriter::new(std::fs::File::create(&path)?))?;
            written.push(path);
        }
    }
    Ok(written)
}
