//! End-to-end acceptance checks. Prints one PASS/FAIL line per check and
//! exits non-zero if any fails.

use std::collections::{HashMap, HashSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use vsearch_cli::{cmd_bench, cmd_build, cmd_ingest, cmd_synth, cmd_tune, RunConfig, SynthOptions};
use vsearch_core::engine::BuildConfig;
use vsearch_core::eval::{run_grid, Metrics, Objective, ParameterGrid, Theta};
use vsearch_core::storage::{load_index, save_index};
use vsearch_core::synthetic::{clustered, random_unit_vectors, ClusterSpec};
use vsearch_core::{
    Backend, DocId, EfParams, FlatIndex, HnswIndex, HnswParams, IvfIndex, NormalizedEmbedding,
    ProbeParams, QuerySpec, SearchEngine, SearchHit, SearchParams,
};

type Check = Result<String, String>;

/// Exhaustive scan written without the library's scoring code.
fn scan(rows: &[NormalizedEmbedding], q: &NormalizedEmbedding, k: usize) -> Vec<(u64, f64)> {
    let mut scored: Vec<(u64, f64)> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let s: f64 = r
                .values()
                .iter()
                .zip(q.values())
                .map(|(&a, &b)| f64::from(a) * f64::from(b))
                .sum();
            (i as u64, s.clamp(-1.0, 1.0))
        })
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scored.truncate(k);
    scored
}

fn recall10(hits: &[SearchHit], truth: &[(u64, f64)]) -> f64 {
    let t: HashSet<u64> = truth.iter().take(10).map(|p| p.0).collect();
    hits.iter().take(10).filter(|h| t.contains(&h.doc_id.0)).count() as f64 / t.len() as f64
}

fn mixture(n: usize, dim: usize, clusters: usize, spread: f64, seed: u64) -> Vec<NormalizedEmbedding> {
    clustered(ClusterSpec {
        n,
        dim,
        clusters,
        spread,
        seed,
    })
    .vectors
}

fn keyed(rows: &[NormalizedEmbedding]) -> Vec<(DocId, NormalizedEmbedding)> {
    rows.iter().enumerate().map(|(i, v)| (DocId(i as u64), v.clone())).collect()
}

fn non_decreasing(values: &[f64], slack: f64) -> bool {
    values.windows(2).all(|w| w[1] >= w[0] - slack)
}

fn fmt_list(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>().join(" ")
}

fn compare_exact(got: &[SearchHit], want: &[(u64, f64)], tol: f64) -> Result<f64, String> {
    if got.len() != want.len() {
        return Err(format!("{} hits, expected {}", got.len(), want.len()));
    }
    let mut worst = 0f64;
    for (h, &(id, s)) in got.iter().zip(want) {
        if h.doc_id.0 != id {
            return Err(format!("id {} at rank {}, expected {id}", h.doc_id, h.rank));
        }
        worst = worst.max((h.score - s).abs());
    }
    if worst > tol {
        return Err(format!("score error {worst:e}"));
    }
    Ok(worst)
}

fn flat_exactness() -> Check {
    let start = Instant::now();
    let rows = random_unit_vectors(1_000, 64, 101);
    let queries = random_unit_vectors(100, 64, 102);
    let mut idx = FlatIndex::new(64).map_err(|e| e.to_string())?;
    for (id, v) in keyed(&rows) {
        idx.add(id, &v).map_err(|e| e.to_string())?;
    }
    idx.freeze();
    let mut worst = 0f64;
    for q in &queries {
        let hits = idx.search(q, 10).map_err(|e| e.to_string())?;
        worst = worst.max(compare_exact(&hits, &scan(&rows, q, 10), 1e-6)?);
    }
    let t = start.elapsed();
    let detail = format!("1000x64, 100 queries match the scan, max score error {worst:.1e}, {t:.2?}");
    if t < Duration::from_secs(5) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn ivf_index(rows: &[NormalizedEmbedding], nlist: usize, seed: u64) -> IvfIndex {
    let mut idx = IvfIndex::new(rows[0].dim(), nlist).unwrap();
    idx.train(rows, seed).unwrap();
    for (id, v) in keyed(rows) {
        idx.add(id, &v).unwrap();
    }
    idx.freeze();
    idx
}

fn ivf_degeneracy() -> Check {
    let start = Instant::now();
    let rows = random_unit_vectors(1_000, 64, 111);
    let queries = random_unit_vectors(100, 64, 112);
    let idx = ivf_index(&rows, 16, 113);
    let all = ProbeParams::new(16, 16).map_err(|e| e.to_string())?;
    for q in &queries {
        let hits = idx.search(q, 10, all).map_err(|e| e.to_string())?;
        compare_exact(&hits, &scan(&rows, q, 10), 0.0)?;
    }
    let t = start.elapsed();
    let detail = format!("nlist 16, nprobe 16 identical to the scan on 100 queries, {t:.2?}");
    if t < Duration::from_secs(10) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn ivf_monotonicity() -> Check {
    let data = mixture(1_100, 64, 30, 2.0, 121);
    let (rows, queries) = data.split_at(1_000);
    let idx = ivf_index(rows, 16, 122);
    let truth: Vec<_> = queries.iter().map(|q| scan(rows, q, 10)).collect();
    let recalls: Vec<f64> = [1, 2, 4, 8, 16]
        .iter()
        .map(|&np| {
            let p = ProbeParams::new(np, 16).unwrap();
            queries
                .iter()
                .zip(&truth)
                .map(|(q, t)| recall10(&idx.search(q, 10, p).unwrap(), t))
                .sum::<f64>()
                / queries.len() as f64
        })
        .collect();
    let detail = format!("recall@10 at nprobe 1/2/4/8/16: {}", fmt_list(&recalls));
    if non_decreasing(&recalls, 0.01) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

struct HnswFixture {
    rows: Vec<NormalizedEmbedding>,
    queries: Vec<NormalizedEmbedding>,
    truth: Vec<Vec<(u64, f64)>>,
    index: HnswIndex,
    build: Duration,
}

fn hnsw_fixture() -> HnswFixture {
    let mut rows = mixture(10_100, 64, 100, 2.0, 131);
    let queries = rows.split_off(10_000);
    let start = Instant::now();
    let mut index = HnswIndex::init_index(
        64,
        HnswParams {
            capacity: rows.len(),
            m: 16,
            ef_construction: 200,
            seed: 132,
        },
    )
    .unwrap();
    let items = keyed(&rows);
    index.add_items(items.iter().map(|(id, v)| (*id, v))).unwrap();
    index.freeze();
    let build = start.elapsed();
    let truth = queries.iter().map(|q| scan(&rows, q, 10)).collect();
    HnswFixture {
        rows,
        queries,
        truth,
        index,
        build,
    }
}

fn hnsw_recall(f: &HnswFixture, ef: usize) -> (f64, Duration) {
    let start = Instant::now();
    let total: f64 = f
        .queries
        .iter()
        .zip(&f.truth)
        .map(|(q, t)| recall10(&f.index.search(q, 10, EfParams::new(ef, 10).unwrap()).unwrap(), t))
        .sum();
    (total / f.queries.len() as f64, start.elapsed())
}

fn hnsw_quality(f: &HnswFixture) -> Check {
    let (r, query_time) = hnsw_recall(f, 100);
    let total = f.build + query_time;
    let detail = format!(
        "{} vectors x64, M 16, efC 200, ef 100: recall@10 {r:.3} over {} queries, build+query {total:.2?}",
        f.rows.len(),
        f.queries.len()
    );
    if r >= 0.95 && total < Duration::from_secs(120) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn hnsw_ef_monotonicity(f: &HnswFixture) -> Check {
    let recalls: Vec<f64> = [16, 32, 64, 128].iter().map(|&ef| hnsw_recall(f, ef).0).collect();
    let detail = format!("recall@10 at ef 16/32/64/128: {}", fmt_list(&recalls));
    if non_decreasing(&recalls, 0.01) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn engine_fixture() -> (Vec<NormalizedEmbedding>, SearchEngine) {
    let rows = mixture(2_000, 32, 20, 0.6, 141);
    let engine = SearchEngine::build(32, &keyed(&rows), &BuildConfig::all()).unwrap();
    (rows, engine)
}

fn multi_vector_law(engine: &SearchEngine) -> Check {
    let queries = random_unit_vectors(150, 32, 142);
    let params = SearchParams::default();
    for backend in Backend::ALL {
        for qs in queries.chunks(3) {
            let mut union: HashMap<DocId, f64> = HashMap::new();
            for q in qs {
                for h in engine.single_vector_search(q, 10, backend, &params).map_err(|e| e.to_string())? {
                    let s = union.entry(h.doc_id).or_insert(f64::MIN);
                    *s = s.max(h.score);
                }
            }
            let spec = QuerySpec {
                vectors: qs.to_vec(),
                ..QuerySpec::single(qs[0].clone(), 10, backend)
            };
            let got = engine.multi_vector_union(&spec).map_err(|e| e.to_string())?;
            let ids: HashSet<DocId> = got.hits.iter().map(|h| h.doc_id).collect();
            if ids != union.keys().copied().collect() {
                return Err(format!("{backend}: id sets differ"));
            }
            if got.hits.iter().any(|h| h.score != union[&h.doc_id]) {
                return Err(format!("{backend}: an id lost its max score"));
            }
        }
    }
    Ok("50 three-vector queries on every backend: union of singles at max score".into())
}

fn threshold_nesting(engine: &SearchEngine, rows: &[NormalizedEmbedding]) -> Check {
    let mut sizes = [0usize; 3];
    for backend in Backend::ALL {
        for q in rows.iter().step_by(40) {
            let sets: Vec<HashSet<DocId>> = [0.7, 0.8, 0.9]
                .iter()
                .map(|&tau| {
                    let spec = QuerySpec::single(q.clone(), 50, backend).with_threshold(tau);
                    engine.multi_vector_search(&spec).unwrap().hits.iter().map(|h| h.doc_id).collect()
                })
                .collect();
            for (s, set) in sizes.iter_mut().zip(&sets) {
                *s += set.len();
            }
            if !(sets[2].is_subset(&sets[1]) && sets[1].is_subset(&sets[0])) {
                return Err(format!("{backend}: hit sets not nested"));
            }
        }
    }
    Ok(format!(
        "hits(0.9) within hits(0.8) within hits(0.7) for 50 queries x 4 backends (total hits {} / {} / {})",
        sizes[0], sizes[1], sizes[2]
    ))
}

fn hybrid_sanity() -> Check {
    let mut rows = mixture(5_100, 64, 50, 2.0, 151);
    let queries = rows.split_off(5_000);
    let engine = SearchEngine::build(64, &keyed(&rows), &BuildConfig::all()).map_err(|e| e.to_string())?;
    let params = SearchParams::default();
    let truth: Vec<_> = queries.iter().map(|q| scan(&rows, q, 10)).collect();
    let recall = |b: Backend| {
        queries
            .iter()
            .zip(&truth)
            .map(|(q, t)| recall10(&engine.single_vector_search(q, 10, b, &params).unwrap(), t))
            .sum::<f64>()
            / queries.len() as f64
    };
    let (ivf, hnsw, hybrid) = (recall(Backend::Ivf), recall(Backend::Hnsw), recall(Backend::Hybrid));
    let detail = format!("5000 clustered: recall@10 ivf {ivf:.3} hnsw {hnsw:.3} hybrid {hybrid:.3}");
    if hybrid >= ivf.max(hnsw) - 0.01 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn tuner_correctness() -> Check {
    let dims = [256, 512, 1024];
    let taus = [0.7, 0.8, 0.9];
    let models = ["model-a", "model-b", "model-c"];
    // Known values per cell, in this test's own enumeration order.
    let mut table = Vec::new();
    for (i, &d) in dims.iter().enumerate() {
        for (j, &t) in taus.iter().enumerate() {
            for (l, &m) in models.iter().enumerate() {
                let n = i * 9 + j * 3 + l;
                let precision = 0.5 + ((n * 7) % 27) as f64 / 100.0;
                let time = 0.01 + ((n * 11) % 27) as f64 / 1000.0;
                table.push(((d, t, m), precision, time));
            }
        }
    }
    let best_p = table.iter().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap().0;
    let best_ratio = table
        .iter()
        .max_by(|a, b| (a.1 / a.2).total_cmp(&(b.1 / b.2)))
        .unwrap()
        .0;
    let grid = ParameterGrid {
        dims: dims.to_vec(),
        thresholds: taus.to_vec(),
        models: models.iter().map(|s| s.to_string()).collect(),
        index_types: vec![Backend::Flat],
    };
    let lookup = |th: &Theta| {
        let row = table
            .iter()
            .find(|r| r.0 == (th.dim, th.threshold, th.model.as_str()))
            .expect("cell in table");
        Ok(Metrics {
            precision: row.1,
            recall: 0.5,
            mean_query_time: row.2,
        })
    };
    let key = |t: &vsearch_core::eval::TrialResult| (t.dim, t.threshold, t.model.clone());
    let mp = run_grid(&grid, Objective::MaxPrecision, lookup).map_err(|e| e.to_string())?;
    let pt = run_grid(&grid, Objective::PrecisionPerTime, lookup).map_err(|e| e.to_string())?;
    if mp.trials.len() != 27 {
        return Err(format!("{} trials", mp.trials.len()));
    }
    let got_p = key(mp.best().unwrap());
    let got_r = key(pt.best().unwrap());
    let detail = format!(
        "27 cells; precision argmax {:?}, ratio argmax {:?}",
        (got_p.0, got_p.1, &got_p.2),
        (got_r.0, got_r.1, &got_r.2)
    );
    if got_p == (best_p.0, best_p.1, best_p.2.to_string())
        && got_r == (best_ratio.0, best_ratio.1, best_ratio.2.to_string())
        && best_p != best_ratio
    {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn desk_pipeline(dir: &Path) -> Check {
    let start = Instant::now();
    let raw = dir.join("raw");
    let config = cmd_synth(
        &SynthOptions {
            docs: 1_000,
            dim: 1_024,
            clusters: 8,
            spread: 0.3,
            models: vec!["model-a".into(), "model-b".into(), "model-c".into()],
            seed: 161,
        },
        &raw,
    )
    .map_err(|e| e.to_string())?;
    let mut cfg = RunConfig::load(&config).map_err(|e| e.to_string())?;
    let ingested = dir.join("ingested");
    cmd_ingest(&cfg, &ingested).map_err(|e| e.to_string())?;

    cfg.base_dir = ingested.clone();
    cfg.grid.dims = vec![256, 512, 1024];
    cfg.grid.thresholds = vec![0.7, 0.8, 0.9];
    cfg.search.threshold = 0.8;
    cmd_build(&cfg, &dir.join("index")).map_err(|e| e.to_string())?;
    let tune = cmd_tune(&cfg, &dir.join("report"), None).map_err(|e| e.to_string())?;
    let bench = cmd_bench(&cfg, &dir.join("report"), None, 100).map_err(|e| e.to_string())?;
    let t = start.elapsed();

    let at_08: Vec<f64> = tune
        .trials
        .iter()
        .filter(|r| r.threshold == 0.8)
        .map(|r| r.precision)
        .collect();
    let min_p = at_08.iter().copied().fold(f64::INFINITY, f64::min);
    let detail = format!(
        "{} trials, min precision at 0.8 over {} cells {min_p:.4}, flat recall@10 {:.3}, {t:.1?}",
        tune.trials.len(),
        at_08.len(),
        bench.recall_at_10
    );
    if tune.trials.len() == 27
        && at_08.len() == 9
        && min_p >= 0.95
        && bench.recall_at_10 == 1.0
        && t < Duration::from_secs(600)
    {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn persistence(dir: &Path) -> Check {
    let rows = mixture(1_500, 32, 12, 0.8, 171);
    let queries = random_unit_vectors(50, 32, 172);
    let built = SearchEngine::build(32, &keyed(&rows), &BuildConfig::all()).map_err(|e| e.to_string())?;
    let paths = ["flat", "ivf", "hnsw"].map(|k| dir.join(format!("{k}.vsix")));
    save_index(&paths[0], built.flat().unwrap()).map_err(|e| e.to_string())?;
    save_index(&paths[1], built.ivf().unwrap()).map_err(|e| e.to_string())?;
    save_index(&paths[2], built.hnsw().unwrap()).map_err(|e| e.to_string())?;
    let loaded = SearchEngine::new(32)
        .with_flat(load_index::<FlatIndex>(&paths[0]).map_err(|e| e.to_string())?)
        .and_then(|e| e.with_ivf(load_index::<IvfIndex>(&paths[1])?))
        .and_then(|e| e.with_hnsw(load_index::<HnswIndex>(&paths[2])?))
        .map_err(|e| e.to_string())?;
    for backend in [Backend::Flat, Backend::Ivf, Backend::Hnsw] {
        for q in &queries {
            let spec = QuerySpec::single(q.clone(), 10, backend);
            let a = built.multi_vector_search(&spec).map_err(|e| e.to_string())?;
            let b = loaded.multi_vector_search(&spec).map_err(|e| e.to_string())?;
            if a.hits != b.hits {
                return Err(format!("{backend}: results differ after reload"));
            }
        }
    }
    Ok("flat, ivf and hnsw snapshots reproduce 50 queries exactly".into())
}

fn without_timing_json(path: &Path) -> Result<String, String> {
    let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
    let mut v: serde_json::Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    for row in v.as_array_mut().ok_or("trials.json is not an array")? {
        row.as_object_mut().ok_or("row is not an object")?.remove("mean_query_time_s");
    }
    Ok(v.to_string())
}

fn without_timing_csv(path: &Path) -> Result<String, String> {
    let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
    let header: Vec<&str> = text.lines().next().unwrap_or("").split(',').collect();
    let col = header
        .iter()
        .position(|h| *h == "mean_query_time_s")
        .ok_or("no timing column")?;
    Ok(text
        .lines()
        .map(|l| {
            let mut cells: Vec<&str> = l.split(',').collect();
            cells.remove(col);
            cells.join(",")
        })
        .collect::<Vec<_>>()
        .join("\n"))
}

fn determinism(dir: &Path) -> Check {
    let raw = dir.join("raw");
    let config = cmd_synth(
        &SynthOptions {
            docs: 400,
            dim: 48,
            clusters: 6,
            spread: 0.5,
            models: vec!["m1".into(), "m2".into()],
            seed: 181,
        },
        &raw,
    )
    .map_err(|e| e.to_string())?;
    let mut cfg = RunConfig::load(&config).map_err(|e| e.to_string())?;
    cfg.grid.dims = vec![16, 48];
    cfg.grid.index_types = Backend::ALL.to_vec();
    let a = cmd_tune(&cfg, &dir.join("run1"), None).map_err(|e| e.to_string())?;
    let b = cmd_tune(&cfg, &dir.join("run2"), None).map_err(|e| e.to_string())?;
    let same_csv = without_timing_csv(&a.csv_path)? == without_timing_csv(&b.csv_path)?;
    let same_json = without_timing_json(&a.json_path)? == without_timing_json(&b.json_path)?;
    let detail = format!("two tune runs over {} cells: csv equal {same_csv}, json equal {same_json}", a.trials.len());
    if same_csv && same_json {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn main() {
    let tmp = tempfile::tempdir().expect("temp dir");
    let sub = |name: &str| {
        let p = tmp.path().join(name);
        std::fs::create_dir_all(&p).unwrap();
        p
    };
    let mut failed = 0;
    let mut report = |name: &str, f: &mut dyn FnMut() -> Check| {
        let (ok, detail) = match catch_unwind(AssertUnwindSafe(f)) {
            Ok(Ok(d)) => (true, d),
            Ok(Err(d)) => (false, d),
            Err(_) => (false, "panicked".to_string()),
        };
        if !ok {
            failed += 1;
        }
        println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    };

    report("flat exactness", &mut flat_exactness);
    report("ivf full probe equals flat", &mut ivf_degeneracy);
    report("ivf recall monotone in nprobe", &mut ivf_monotonicity);
    let hnsw = hnsw_fixture();
    report("hnsw recall at 10k", &mut || hnsw_quality(&hnsw));
    report("hnsw recall monotone in ef", &mut || hnsw_ef_monotonicity(&hnsw));
    drop(hnsw);
    let (rows, engine) = engine_fixture();
    report("multi-vector union law", &mut || multi_vector_law(&engine));
    report("threshold nesting", &mut || threshold_nesting(&engine, &rows));
    report("hybrid not worse than parts", &mut hybrid_sanity);
    report("tuner argmax", &mut tuner_correctness);
    report("desk-scale pipeline", &mut || desk_pipeline(&sub("desk")));
    report("snapshot round trip", &mut || persistence(&sub("persist")));
    report("tune determinism", &mut || determinism(&sub("determinism")));

    println!("acceptance: {} passed, {failed} failed", 12 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
