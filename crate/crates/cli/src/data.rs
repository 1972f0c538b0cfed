use qcluster::coreset::{
    build_coreset, kmeanspp_centroids, WeightedCoreset, DEFAULT_KMEANSPP_ITERATIONS, DEFAULT_NUM_CENTROIDS,
};
use qcluster::data::{generate_blobs, load_csv, save_csv, BlobComponent, BlobSpec, DataSet};
use qcluster::derive_seed;
use rand::Rng;
use serde::Serialize;

use crate::{read_json, resolve_seed, write_json, BlobArgs, CliError, CoresetArgs, GenDataArgs, Result};

/// Seed stream for the blob means; the point noise uses the seed itself.
const MEANS_STREAM: u64 = 0x6d65616e73;

pub(crate) fn blob_spec(args: &BlobArgs, seed: u64) -> Result<BlobSpec> {
    if args.blobs == 0 || args.points_per_blob == 0 || args.dim == 0 {
        return Err(CliError::Config("blob count, points per blob and dimension must be positive".into()));
    }
    if !(args.spread >= 0.0) || !(args.variance >= 0.0) {
        return Err(CliError::Config("spread and variance must be non-negative".into()));
    }
    let mut rng = qcluster::seeded_rng(derive_seed(seed, MEANS_STREAM));
    let components = (0..args.blobs)
        .map(|_| {
            let mean = (0..args.dim).map(|_| rng.random_range(-args.spread..=args.spread)).collect();
            BlobComponent::isotropic(mean, args.variance, args.points_per_blob)
        })
        .collect();
    Ok(BlobSpec { components, seed })
}

/// Loads `path` or samples the default blob dataset for `seed`.
pub(crate) fn load_or_generate(path: Option<&std::path::Path>, blobs: &BlobArgs, seed: u64) -> Result<(DataSet, String)> {
    match path {
        Some(p) => Ok((load_csv(p)?, p.display().to_string())),
        None => Ok((generate_blobs(&blob_spec(blobs, seed)?)?, format!("blobs(seed={seed})"))),
    }
}

/// Normalizes the dataset, picks bicriterion centroids and samples `m` points.
pub(crate) fn build(dataset: &DataSet, m: usize, seed: u64, source: &str) -> qcluster::Result<WeightedCoreset> {
    let points = dataset.normalized();
    let centroids = kmeanspp_centroids(points.points(), DEFAULT_NUM_CENTROIDS, DEFAULT_KMEANSPP_ITERATIONS, seed)?;
    let c = build_coreset(points.points(), &centroids, m, seed)?;
    WeightedCoreset::with_source(c.vectors().to_vec(), c.weights().to_vec(), seed, source)
}

#[derive(Serialize)]
struct GenMeta<'a> {
    seed: u64,
    seed_drawn: bool,
    spec: &'a BlobSpec,
}

pub(crate) fn gen_data(args: &GenDataArgs) -> Result<()> {
    let (seed, drawn) = resolve_seed(args.seed);
    let spec = match &args.spec {
        Some(path) => {
            let mut spec: BlobSpec = read_json(path)?;
            if args.seed.is_some() {
                spec.seed = seed;
            }
            spec
        }
        None => blob_spec(&args.blobs, seed)?,
    };
    let dataset = generate_blobs(&spec)?;
    save_csv(&dataset, &args.out)?;
    let meta = args.out.with_extension("spec.json");
    write_json(&meta, &GenMeta { seed: spec.seed, seed_drawn: drawn, spec: &spec })
}

pub(crate) fn coreset(args: &CoresetArgs) -> Result<()> {
    let (seed, _) = resolve_seed(args.seed);
    let m = args.coreset_size.unwrap_or(args.problem.default_coreset_size());
    let (dataset, source) = load_or_generate(args.data.as_deref(), &args.blobs, seed)?;
    let c = build(&dataset, m, seed, &source)?;
    write_json(&args.out, &c)
}
