//! One function per pipeline stage. Every stage reads upstream artifacts
//! (with staleness checks against their manifests), writes its outputs
//! atomically, and records a manifest of input hashes, parameters, and
//! output hashes.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use serde_json::json;
use sha2::{Digest, Sha256};

use debatenet::assort::{compute_profiles, histogram_set};
use debatenet::classify::{
    assign_clusters, coverage, fallback_merge, BoundarySpec, ClusterAssignment, Label,
};
use debatenet::forest::{
    aggregate_reply_network, build_forest, ccdf, forest_metrics, read_trees, reply_authors,
    write_metrics_csv, write_trees, ReplyTree,
};
use debatenet::graph::InteractionGraph;
use debatenet::ingest::{parse_archive, write_archive, ParseMode, SeedSet};
use debatenet::layout::{spatialize, LayoutEmbedding};
use debatenet::plot;
use debatenet::record::{InteractionRecord, UserId};
use debatenet::stats::{
    chi_square, engagement_table, first_order_table, interaction_matrix, participation_share,
    two_proportion_z, EngagementTable, TestResult,
};
use debatenet::synth::{generate, GeneratorParams};

use crate::config::PipelineConfig;
use crate::manifest::{require_artifact, ManifestBuilder};
use crate::Failure;

pub struct Ctx {
    pub config: PipelineConfig,
    pub out: PathBuf,
    pub force: bool,
    pub strict: bool,
    pub seed: Option<u64>,
}

impl Ctx {
    fn parse_mode(&self) -> ParseMode {
        if self.strict {
            ParseMode::Strict
        } else {
            self.config.parse.mode
        }
    }

    fn layout_seed(&self) -> u64 {
        self.seed.unwrap_or(self.config.layout.seed)
    }

    fn has_fallback(&self) -> bool {
        self.config.fallback_filter.is_some()
    }
}

fn open_reader(path: &Path) -> Result<BufReader<std::fs::File>, Failure> {
    let file = std::fs::File::open(path)
        .with_context(|| format!("cannot open {}", path.display()))
        .map_err(Failure::Usage)?;
    Ok(BufReader::new(file))
}

fn to_bytes(write: impl FnOnce(&mut Vec<u8>) -> debatenet::Result<()>) -> Result<Vec<u8>, Failure> {
    let mut buf = Vec::new();
    write(&mut buf).map_err(|e| Failure::Data(anyhow!(e)))?;
    Ok(buf)
}

fn load_archive(path: &Path, mode: ParseMode) -> Result<Vec<InteractionRecord>, Failure> {
    let reader = open_reader(path)?;
    let outcome = parse_archive(reader, mode, debatenet::ingest::QuotePolicy::Retweet)
        .map_err(|e| Failure::Data(anyhow!("{}: {e}", path.display())))?;
    if !outcome.errors.is_empty() {
        return Err(Failure::Data(anyhow!(
            "{}: {} malformed lines in a pipeline artifact",
            path.display(),
            outcome.errors.len()
        )));
    }
    Ok(outcome.records)
}

fn load_assignment(path: &Path) -> Result<(ClusterAssignment, BTreeSet<UserId>), Failure> {
    let reader = open_reader(path)?;
    ClusterAssignment::read_csv(reader).map_err(|e| Failure::Data(anyhow!(e)))
}

fn ccdf_csv(values: &[u64]) -> Result<(Vec<u8>, Vec<(u64, f64)>), Failure> {
    let mut buf = Vec::new();
    use std::io::Write;
    writeln!(buf, "threshold,fraction_ge").map_err(|e| Failure::Data(anyhow!(e)))?;
    if values.is_empty() {
        return Ok((buf, Vec::new()));
    }
    let steps = ccdf(values).map_err(|e| Failure::Data(anyhow!(e)))?;
    for (v, f) in &steps {
        writeln!(buf, "{v},{f}").map_err(|e| Failure::Data(anyhow!(e)))?;
    }
    Ok((buf, steps))
}

pub fn cmd_ingest(ctx: &Ctx) -> Result<(), Failure> {
    let mut manifest = ManifestBuilder::new("ingest", &ctx.out);
    let archive = &ctx.config.paths.archive;
    manifest.input(archive)?;

    let filter = ctx.config.filter.to_filter().map_err(Failure::Usage)?;
    let reader = open_reader(archive)?;
    let outcome = parse_archive(reader, ctx.parse_mode(), ctx.config.parse.quote_policy)
        .map_err(|e| Failure::Data(anyhow!("{}: {e}", archive.display())))?;

    let mut error_report = String::new();
    for err in &outcome.errors {
        let _ = writeln!(error_report, "line {}: {}", err.line, err.message);
    }
    manifest.write_output("ingest_errors.txt", error_report.as_bytes())?;

    let filtered = filter
        .apply(outcome.records.clone())
        .map_err(|e| Failure::Data(anyhow!(e)))?;
    manifest.write_output(
        "records.jsonl",
        &to_bytes(|w| write_archive(w, &filtered))?,
    )?;

    let mut fallback_count = None;
    if let Some(section) = &ctx.config.fallback_filter {
        let fallback_filter = section.to_filter().map_err(Failure::Usage)?;
        let fallback = fallback_filter
            .apply(outcome.records)
            .map_err(|e| Failure::Data(anyhow!(e)))?;
        fallback_count = Some(fallback.len());
        manifest.write_output(
            "records_fallback.jsonl",
            &to_bytes(|w| write_archive(w, &fallback))?,
        )?;
    }

    manifest.params(json!({
        "filter": ctx.config.filter,
        "fallback_filter": ctx.config.fallback_filter,
        "parse_mode": ctx.parse_mode(),
        "quote_policy": ctx.config.parse.quote_policy,
        "parse_errors": outcome.errors.len(),
        "dropped_quotes": outcome.dropped_quotes,
        "records_kept": filtered.len(),
        "fallback_records_kept": fallback_count,
    }));
    manifest.finish()?;
    println!(
        "ingest: kept {} records ({} malformed lines)",
        filtered.len(),
        outcome.errors.len()
    );
    Ok(())
}

fn build_retweet_net(
    ctx: &Ctx,
    manifest: &mut ManifestBuilder,
    records_name: &str,
    edges_name: &str,
) -> Result<serde_json::Value, Failure> {
    let records_path = require_artifact(&ctx.out, "ingest", "ingest", records_name, ctx.force)?;
    let records = load_archive(&records_path, ParseMode::Strict)?;
    let graph = InteractionGraph::retweet_network(&records);
    manifest.write_output(edges_name, &to_bytes(|w| graph.write_edge_list(w))?)?;
    Ok(json!({
        "nodes": graph.node_count(),
        "edges": graph.edge_count(),
        "total_weight": graph.total_weight(),
        "self_loops": graph.self_loop_tally(),
        "giant_component": graph.weak_components().giant_size(),
    }))
}

pub fn cmd_retweet_net(ctx: &Ctx) -> Result<(), Failure> {
    let mut manifest = ManifestBuilder::new("retweet_net", &ctx.out);
    manifest.input(&ctx.out.join("records.jsonl"))?;
    let event = build_retweet_net(ctx, &mut manifest, "records.jsonl", "retweet_edges.tsv")?;
    let mut fallback = serde_json::Value::Null;
    if ctx.has_fallback() {
        manifest.input(&ctx.out.join("records_fallback.jsonl"))?;
        fallback = build_retweet_net(
            ctx,
            &mut manifest,
            "records_fallback.jsonl",
            "retweet_fallback_edges.tsv",
        )?;
    }
    println!(
        "retweet-net: event network {} nodes / {} edges",
        event["nodes"], event["edges"]
    );
    manifest.params(json!({"event": event, "fallback": fallback}));
    manifest.finish()?;
    Ok(())
}

pub fn cmd_forest(ctx: &Ctx) -> Result<(), Failure> {
    let mut manifest = ManifestBuilder::new("forest", &ctx.out);
    let records_path =
        require_artifact(&ctx.out, "ingest", "ingest", "records.jsonl", ctx.force)?;
    manifest.input(&records_path)?;
    manifest.input(&ctx.config.paths.seeds)?;

    let records = load_archive(&records_path, ParseMode::Strict)?;
    let seeds = SeedSet::read(open_reader(&ctx.config.paths.seeds)?)
        .map_err(|e| Failure::Data(anyhow!("seed file: {e}")))?;
    let (forest, tallies) = build_forest(&records, &seeds, ctx.parse_mode())
        .map_err(|e| Failure::Data(anyhow!(e)))?;

    manifest.write_output("trees.jsonl", &to_bytes(|w| write_trees(w, &forest, None))?)?;
    manifest.write_output(
        "tree_metrics.csv",
        &to_bytes(|w| write_metrics_csv(w, &forest))?,
    )?;

    let reply_net = aggregate_reply_network(&forest);
    manifest.write_output(
        "reply_edges.tsv",
        &to_bytes(|w| reply_net.write_edge_list(w))?,
    )?;

    let participants = debatenet::forest::tree_participants(&forest);
    let mut users_txt = String::new();
    for user in &participants {
        let _ = writeln!(users_txt, "{user}");
    }
    manifest.write_output("reply_users.txt", users_txt.as_bytes())?;

    let metrics = forest_metrics(&forest);
    let sizes: Vec<u64> = metrics.iter().map(|m| m.size).collect();
    let depths: Vec<u64> = metrics.iter().map(|m| m.depth).collect();
    let (size_csv, _) = ccdf_csv(&sizes)?;
    let (depth_csv, _) = ccdf_csv(&depths)?;
    manifest.write_output("ccdf_size.csv", &size_csv)?;
    manifest.write_output("ccdf_depth.csv", &depth_csv)?;

    let summary = json!({
        "trees": forest.len(),
        "tallies": tallies,
        "max_size": sizes.iter().max(),
        "max_depth": depths.iter().max(),
        "largest_tree_replies": sizes.iter().max().map(|s| s - 1),
        "reply_network": {
            "nodes": reply_net.node_count(),
            "edges": reply_net.edge_count(),
            "total_weight": reply_net.total_weight(),
            "self_replies": reply_net.self_loop_tally(),
        },
    });
    manifest.write_output(
        "forest_summary.json",
        serde_json::to_string_pretty(&summary)
            .map_err(|e| Failure::Data(anyhow!(e)))?
            .as_bytes(),
    )?;
    manifest.params(json!({"parse_mode": ctx.parse_mode(), "summary": summary}));
    manifest.finish()?;
    println!(
        "forest: {} trees, {} replies attached, {} orphans",
        forest.len(),
        tallies.attached,
        tallies.orphans
    );
    Ok(())
}

fn layout_one(
    ctx: &Ctx,
    manifest: &mut ManifestBuilder,
    edges_name: &str,
    embedding_name: &str,
    svg_name: &str,
    seed: u64,
) -> Result<serde_json::Value, Failure> {
    let edges_path =
        require_artifact(&ctx.out, "retweet_net", "retweet-net", edges_name, ctx.force)?;
    let graph = InteractionGraph::read_edge_list(open_reader(&edges_path)?)
        .map_err(|e| Failure::Data(anyhow!(e)))?;
    let giant = graph.giant_component();
    let params = ctx.config.layout.to_params();
    let embedding = spatialize(&giant, &params, seed).map_err(|e| Failure::Data(anyhow!(e)))?;
    manifest.write_output(embedding_name, &to_bytes(|w| embedding.write_csv(w))?)?;
    let svg = plot::layout_svg(&embedding, None, None).map_err(|e| Failure::Data(anyhow!(e)))?;
    manifest.write_output(svg_name, svg.as_bytes())?;
    Ok(json!({
        "seed": seed,
        "nodes": giant.node_count(),
        "mean_displacement": embedding.meta.as_ref().map(|m| m.mean_displacement),
    }))
}

pub fn cmd_layout(ctx: &Ctx) -> Result<(), Failure> {
    let mut manifest = ManifestBuilder::new("layout", &ctx.out);
    manifest.input(&ctx.out.join("retweet_edges.tsv"))?;
    let event = layout_one(
        ctx,
        &mut manifest,
        "retweet_edges.tsv",
        "embedding.csv",
        "layout_preview.svg",
        ctx.layout_seed(),
    )?;
    let mut fallback = serde_json::Value::Null;
    if ctx.has_fallback() {
        manifest.input(&ctx.out.join("retweet_fallback_edges.tsv"))?;
        fallback = layout_one(
            ctx,
            &mut manifest,
            "retweet_fallback_edges.tsv",
            "embedding_fallback.csv",
            "layout_fallback_preview.svg",
            ctx.layout_seed().wrapping_add(1),
        )?;
    }
    manifest.params(json!({
        "layout": ctx.config.layout,
        "event": event,
        "fallback": fallback,
    }));
    manifest.finish()?;
    println!(
        "layout: embedded {} nodes (draw boundaries on layout_preview.svg)",
        event["nodes"]
    );
    Ok(())
}

/// Deterministic pseudo-random sample: order users by the hash of
/// `seed || user_id` and take the first `n`.
fn audit_sample(assignment: &ClusterAssignment, n: usize, seed: u64) -> Vec<UserId> {
    let mut keyed: Vec<(String, UserId)> = assignment
        .iter()
        .map(|(user, _, _)| {
            let mut hasher = Sha256::new();
            hasher.update(seed.to_le_bytes());
            hasher.update(user.as_str().as_bytes());
            (format!("{:x}", hasher.finalize()), user.clone())
        })
        .collect();
    keyed.sort();
    keyed.into_iter().take(n).map(|(_, u)| u).collect()
}

pub fn cmd_classify(ctx: &Ctx, audit: Option<usize>) -> Result<(), Failure> {
    let mut manifest = ManifestBuilder::new("classify", &ctx.out);
    let embedding_path =
        require_artifact(&ctx.out, "layout", "layout", "embedding.csv", ctx.force)?;
    manifest.input(&embedding_path)?;
    let boundaries_path = ctx.config.paths.boundaries.as_ref().ok_or_else(|| {
        Failure::Usage(anyhow!(
            "paths.boundaries is not set; draw the cluster borders over layout_preview.svg and list them in a boundary file"
        ))
    })?;
    manifest.input(boundaries_path)?;
    let reply_users_path =
        require_artifact(&ctx.out, "forest", "forest", "reply_users.txt", ctx.force)?;
    manifest.input(&reply_users_path)?;

    let embedding = LayoutEmbedding::read_csv(open_reader(&embedding_path)?)
        .map_err(|e| Failure::Data(anyhow!(e)))?;
    let boundaries = BoundarySpec::read(open_reader(boundaries_path)?)
        .map_err(|e| Failure::Data(anyhow!("boundary file: {e}")))?;
    let event = assign_clusters(&embedding, &boundaries);
    let universe: Vec<UserId> = embedding.iter().map(|(u, _)| u.clone()).collect();
    manifest.write_output(
        "assignment_event.csv",
        &to_bytes(|w| event.write_csv(w, universe.iter()))?,
    )?;

    let mut fallback = ClusterAssignment::new();
    let mut fallback_used = false;
    if ctx.has_fallback() {
        let fb_boundaries_path = ctx.config.paths.fallback_boundaries.as_ref().ok_or_else(|| {
            Failure::Usage(anyhow!(
                "fallback_filter is configured but paths.fallback_boundaries is not set"
            ))
        })?;
        let fb_embedding_path = require_artifact(
            &ctx.out,
            "layout",
            "layout",
            "embedding_fallback.csv",
            ctx.force,
        )?;
        manifest.input(&fb_embedding_path)?;
        manifest.input(fb_boundaries_path)?;
        let fb_embedding = LayoutEmbedding::read_csv(open_reader(&fb_embedding_path)?)
            .map_err(|e| Failure::Data(anyhow!(e)))?;
        let fb_boundaries = BoundarySpec::read(open_reader(fb_boundaries_path)?)
            .map_err(|e| Failure::Data(anyhow!("fallback boundary file: {e}")))?;
        fallback = assign_clusters(&fb_embedding, &fb_boundaries);
        fallback_used = true;
        let fb_universe: Vec<UserId> = fb_embedding.iter().map(|(u, _)| u.clone()).collect();
        manifest.write_output(
            "assignment_fallback.csv",
            &to_bytes(|w| fallback.write_csv(w, fb_universe.iter()))?,
        )?;
    }

    let reply_users: BTreeSet<UserId> = std::fs::read_to_string(&reply_users_path)
        .map_err(|e| Failure::Data(anyhow!(e)))?
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(UserId::new)
        .collect();
    let merged = fallback_merge(&event, &fallback, reply_users.iter());
    manifest.write_output(
        "assignment.csv",
        &to_bytes(|w| merged.write_csv(w, reply_users.iter()))?,
    )?;

    let svg = plot::layout_svg(&embedding, Some(&event), Some(&boundaries))
        .map_err(|e| Failure::Data(anyhow!(e)))?;
    manifest.write_output("layout_classified.svg", svg.as_bytes())?;

    if let Some(n) = audit {
        let sample = audit_sample(&merged, n, ctx.layout_seed());
        let mut csv = String::from("user_id,label,provenance\n");
        for user in sample {
            let _ = writeln!(
                csv,
                "{user},{},{}",
                merged.label_of(&user),
                merged.provenance_of(&user)
            );
        }
        manifest.write_output("audit_sample.csv", csv.as_bytes())?;
    }

    let coverage_event = if reply_users.is_empty() {
        None
    } else {
        coverage(&event, reply_users.iter()).ok()
    };
    let coverage_merged = if reply_users.is_empty() {
        None
    } else {
        coverage(&merged, reply_users.iter()).ok()
    };
    let summary = json!({
        "embedding_nodes": embedding.len(),
        "event_counts": {
            "majority": event.count_label(Label::Majority),
            "minority": event.count_label(Label::Minority),
            "intermediate": event.count_label(Label::Intermediate),
        },
        "fallback_used": fallback_used,
        "reply_users": reply_users.len(),
        "coverage_event": coverage_event,
        "coverage_merged": coverage_merged,
    });
    manifest.write_output(
        "classify_summary.json",
        serde_json::to_string_pretty(&summary)
            .map_err(|e| Failure::Data(anyhow!(e)))?
            .as_bytes(),
    )?;
    manifest.params(summary);
    manifest.finish()?;
    println!(
        "classify: coverage {} -> {} over {} reply users",
        coverage_event.map_or("n/a".into(), |c| format!("{:.1}%", c * 100.0)),
        coverage_merged.map_or("n/a".into(), |c| format!("{:.1}%", c * 100.0)),
        reply_users.len()
    );
    Ok(())
}

pub fn cmd_assort(ctx: &Ctx) -> Result<(), Failure> {
    let mut manifest = ManifestBuilder::new("assort", &ctx.out);
    let edges_path =
        require_artifact(&ctx.out, "forest", "forest", "reply_edges.tsv", ctx.force)?;
    let assignment_path =
        require_artifact(&ctx.out, "classify", "classify", "assignment.csv", ctx.force)?;
    manifest.input(&edges_path)?;
    manifest.input(&assignment_path)?;

    let graph = InteractionGraph::read_edge_list(open_reader(&edges_path)?)
        .map_err(|e| Failure::Data(anyhow!(e)))?;
    let (assignment, _) = load_assignment(&assignment_path)?;
    let params = ctx.config.assort.to_params();
    let profile =
        compute_profiles(&graph, &assignment, &params).map_err(|e| Failure::Data(anyhow!(e)))?;

    manifest.write_output("assort_profiles.csv", &to_bytes(|w| profile.write_csv(w))?)?;
    let bins = ctx.config.assort.histogram_bins;
    let histograms = histogram_set(&profile, bins).map_err(|e| Failure::Data(anyhow!(e)))?;
    manifest.write_output(
        "assort_histogram.csv",
        &to_bytes(|w| histograms.write_csv(w))?,
    )?;
    manifest.write_output(
        "assort_histograms.svg",
        plot::histogram_svg(&histograms).as_bytes(),
    )?;

    let flagged = profile.entries.iter().filter(|e| e.r_local.is_none()).count();
    let summary = json!({
        "global_assortativity": profile.global_r,
        "q_max": profile.q_max,
        "nodes": profile.entries.len(),
        "flagged_without_labeled_mass": flagged,
        "weighted_mean_r": {
            "majority": profile.weighted_mean_r(Some(Label::Majority)),
            "minority": profile.weighted_mean_r(Some(Label::Minority)),
            "intermediate": profile.weighted_mean_r(Some(Label::Intermediate)),
            "all": profile.weighted_mean_r(None),
        },
    });
    manifest.write_output(
        "assort_summary.json",
        serde_json::to_string_pretty(&summary)
            .map_err(|e| Failure::Data(anyhow!(e)))?
            .as_bytes(),
    )?;
    manifest.params(json!({"ppr": params, "histogram_bins": bins, "summary": summary}));
    manifest.finish()?;
    println!(
        "assort: global r = {:.4}, {} nodes profiled ({} flagged)",
        profile.global_r,
        profile.entries.len(),
        flagged
    );
    Ok(())
}

fn test_row(name: &str, result: &debatenet::Result<TestResult>) -> String {
    match result {
        Ok(t) => format!(
            "{name},{},{},{},{},ok\n",
            t.statistic,
            t.df.map_or(String::new(), |d| d.to_string()),
            t.p_value,
            t.sample_sizes
                .iter()
                .map(|n| n.to_string())
                .collect::<Vec<_>>()
                .join(";"),
        ),
        Err(e) => format!("{name},,,,,{e}\n"),
    }
}

pub fn cmd_stats(ctx: &Ctx) -> Result<(), Failure> {
    let mut manifest = ManifestBuilder::new("stats", &ctx.out);
    let trees_path = require_artifact(&ctx.out, "forest", "forest", "trees.jsonl", ctx.force)?;
    let reply_edges_path =
        require_artifact(&ctx.out, "forest", "forest", "reply_edges.tsv", ctx.force)?;
    let merged_path =
        require_artifact(&ctx.out, "classify", "classify", "assignment.csv", ctx.force)?;
    let event_path = require_artifact(
        &ctx.out,
        "classify",
        "classify",
        "assignment_event.csv",
        ctx.force,
    )?;
    for p in [&trees_path, &reply_edges_path, &merged_path, &event_path] {
        manifest.input(p)?;
    }
    manifest.input(&ctx.config.paths.seeds)?;

    let forest = read_trees(open_reader(&trees_path)?).map_err(|e| Failure::Data(anyhow!(e)))?;
    let (merged, _) = load_assignment(&merged_path)?;
    let (event, _) = load_assignment(&event_path)?;
    let seeds = SeedSet::read(open_reader(&ctx.config.paths.seeds)?)
        .map_err(|e| Failure::Data(anyhow!("seed file: {e}")))?;

    let engagement = engagement_table(&forest, &merged);
    manifest.write_output("engagement.csv", &to_bytes(|w| engagement.write_csv(w))?)?;
    let first_order = first_order_table(&forest, &merged);
    manifest.write_output("first_order.csv", &to_bytes(|w| first_order.write_csv(w))?)?;

    let authors = reply_authors(&forest);
    let participation = participation_share(&event, authors.iter(), &seeds);
    manifest.write_output(
        "participation.csv",
        &to_bytes(|w| participation.write_csv(w))?,
    )?;

    let mut tests_csv = String::from("test,statistic,df,p_value,sample_sizes,note\n");
    let populated: Vec<_> = participation
        .rows
        .iter()
        .filter(|r| r.base > 0)
        .collect();
    if populated.len() >= 2 {
        let contingency: Vec<Vec<u64>> = populated
            .iter()
            .map(|r| vec![r.active, r.base - r.active])
            .collect();
        tests_csv.push_str(&test_row("chi2_participation", &chi_square(&contingency)));
    }
    let pair = |a: Label, b: Label| -> Option<debatenet::Result<TestResult>> {
        let ra = participation.row(a);
        let rb = participation.row(b);
        (ra.base > 0 && rb.base > 0)
            .then(|| two_proportion_z(ra.active, ra.base, rb.active, rb.base))
    };
    for (name, a, b) in [
        ("z_minority_vs_majority", Label::Minority, Label::Majority),
        (
            "z_intermediate_vs_majority",
            Label::Intermediate,
            Label::Majority,
        ),
        (
            "z_minority_vs_intermediate",
            Label::Minority,
            Label::Intermediate,
        ),
    ] {
        if let Some(result) = pair(a, b) {
            tests_csv.push_str(&test_row(name, &result));
        }
    }
    manifest.write_output("tests.csv", tests_csv.as_bytes())?;

    let reply_net = InteractionGraph::read_edge_list(open_reader(&reply_edges_path)?)
        .map_err(|e| Failure::Data(anyhow!(e)))?;
    let matrix = interaction_matrix(&reply_net, &merged);
    manifest.write_output(
        "interaction_matrix.csv",
        &to_bytes(|w| matrix.write_csv(w))?,
    )?;

    manifest.params(json!({
        "trees": forest.len(),
        "reply_authors": authors.len(),
        "labeled_replies": engagement.labeled_replies(),
    }));
    manifest.finish()?;
    println!(
        "stats: {} reply authors, {} replies tabulated",
        authors.len(),
        engagement.total_replies()
    );
    Ok(())
}

pub fn cmd_synth(
    out: &Path,
    preset: &str,
    seed: u64,
) -> Result<(), Failure> {
    let params = match preset {
        "paper-pattern" => GeneratorParams::paper_pattern(seed),
        "small" => GeneratorParams::small(seed),
        other => {
            return Err(Failure::Usage(anyhow!(
                "unknown preset {other:?} (expected `paper-pattern` or `small`)"
            )))
        }
    };
    let corpus = generate(&params).map_err(|e| Failure::Data(anyhow!(e)))?;
    let mut manifest = ManifestBuilder::new("synth", out);
    manifest.write_output(
        "archive.jsonl",
        &to_bytes(|w| write_archive(w, &corpus.records))?,
    )?;
    manifest.write_output("seeds.txt", &to_bytes(|w| corpus.seeds.write(w))?)?;
    let truth_users: Vec<UserId> = corpus.truth.iter().map(|(u, _, _)| u.clone()).collect();
    manifest.write_output(
        "truth.csv",
        &to_bytes(|w| corpus.truth.write_csv(w, truth_users.iter()))?,
    )?;
    manifest.params(json!({"preset": preset, "generator": corpus.params}));
    manifest.finish()?;
    println!(
        "synth: {} records for {} users written to {}",
        corpus.records.len(),
        corpus.params.total_users(),
        out.display()
    );
    Ok(())
}

fn format_engagement(table: &EngagementTable, title: &str, out: &mut String) {
    let _ = writeln!(out, "{title}");
    let _ = writeln!(out, "{:<16} {:>10} {:>9} {:>10} {:>9}", "cluster", "users", "share", "replies", "share");
    for row in &table.rows {
        let _ = writeln!(
            out,
            "{:<16} {:>10} {:>8.1}% {:>10} {:>8.1}%",
            row.label.to_string(),
            row.users,
            row.user_share * 100.0,
            row.replies,
            row.reply_share * 100.0
        );
    }
    let _ = writeln!(out);
}

pub fn cmd_report(ctx: &Ctx) -> Result<(), Failure> {
    let mut manifest = ManifestBuilder::new("report", &ctx.out);
    // upstream artifacts feeding the report
    let trees_path = require_artifact(&ctx.out, "forest", "forest", "trees.jsonl", ctx.force)?;
    let merged_path =
        require_artifact(&ctx.out, "classify", "classify", "assignment.csv", ctx.force)?;
    for name in [
        "engagement.csv",
        "first_order.csv",
        "participation.csv",
        "tests.csv",
        "interaction_matrix.csv",
    ] {
        let p = require_artifact(&ctx.out, "stats", "stats", name, ctx.force)?;
        manifest.input(&p)?;
        let bytes = std::fs::read(&p).map_err(|e| Failure::Data(anyhow!(e)))?;
        manifest.write_output(&format!("report/{name}"), &bytes)?;
    }
    for name in ["assort_histogram.csv", "assort_histograms.svg", "assort_summary.json"] {
        let p = require_artifact(&ctx.out, "assort", "assort", name, ctx.force)?;
        manifest.input(&p)?;
        let bytes = std::fs::read(&p).map_err(|e| Failure::Data(anyhow!(e)))?;
        manifest.write_output(&format!("report/{name}"), &bytes)?;
    }
    let classified_svg =
        require_artifact(&ctx.out, "classify", "classify", "layout_classified.svg", ctx.force)?;
    manifest.input(&classified_svg)?;
    manifest.write_output(
        "report/layout_classified.svg",
        &std::fs::read(&classified_svg).map_err(|e| Failure::Data(anyhow!(e)))?,
    )?;

    // tree CCDFs rendered fresh from the forest
    manifest.input(&trees_path)?;
    let forest: Vec<ReplyTree> =
        read_trees(open_reader(&trees_path)?).map_err(|e| Failure::Data(anyhow!(e)))?;
    let metrics = forest_metrics(&forest);
    let sizes: Vec<u64> = metrics.iter().map(|m| m.size).collect();
    let depths: Vec<u64> = metrics.iter().map(|m| m.depth).collect();
    if !sizes.is_empty() {
        let size_steps = ccdf(&sizes).map_err(|e| Failure::Data(anyhow!(e)))?;
        let depth_steps = ccdf(&depths).map_err(|e| Failure::Data(anyhow!(e)))?;
        let svg = plot::ccdf_svg(&[("size", &size_steps), ("depth", &depth_steps)]);
        manifest.write_output("report/tree_ccdf.svg", svg.as_bytes())?;
    }

    // consolidated text report
    let (merged, _) = load_assignment(&merged_path)?;
    let engagement = engagement_table(&forest, &merged);
    let first_order = first_order_table(&forest, &merged);
    let mut text = String::new();
    let _ = writeln!(text, "debatenet report");
    let _ = writeln!(text, "================\n");
    let _ = writeln!(
        text,
        "reply trees: {} (largest has {} replies; max depth {})\n",
        forest.len(),
        sizes.iter().max().map_or(0, |s| s - 1),
        depths.iter().max().copied().unwrap_or(0),
    );
    format_engagement(&engagement, "users and replies by cluster", &mut text);
    format_engagement(&first_order, "first-order replies by cluster", &mut text);
    for name in ["participation.csv", "tests.csv", "interaction_matrix.csv"] {
        let _ = writeln!(text, "{name}:");
        let body = std::fs::read_to_string(ctx.out.join(name))
            .map_err(|e| Failure::Data(anyhow!(e)))?;
        text.push_str(&body);
        let _ = writeln!(text);
    }
    if let Ok(summary) = std::fs::read_to_string(ctx.out.join("assort_summary.json")) {
        let _ = writeln!(text, "local assortativity summary:");
        text.push_str(&summary);
        let _ = writeln!(text);
    }
    manifest.write_output("report/report.txt", text.as_bytes())?;
    manifest.params(json!({"trees": forest.len()}));
    manifest.finish()?;
    println!("report: written to {}", ctx.out.join("report").display());
    Ok(())
}
