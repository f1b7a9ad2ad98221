use crate::data::{num, read_pairs, write_csv};
use crate::error::CliError;
use crate::manifest::Run;
use socweave::engagement::{
    build_tweet_features, detect_anchors, engagement_targets, fit_expectation, joint_anchors, synth_timelines,
    toxicity_delta, AnchorEvent, DeltaConfig,
};
use socweave::features::{load_node_features, load_records, write_records, RecordTable};
use socweave::heads::split;

/// Anchor sets keyed by metric name, on one record table.
struct Anchors {
    records: RecordTable,
    sets: Vec<(String, Vec<AnchorEvent>)>,
}

fn synthetic(run: &mut Run) -> Result<Anchors, CliError> {
    let cfg = run.cfg;
    let a = &cfg.approval;
    let st = synth_timelines(&a.synthetic)?;
    let ids: Vec<String> = (0..st.followers.len()).map(|i| i.to_string()).collect();
    let p = run.output("records.jsonl");
    write_records(&st.records, &ids, &p)?;
    let anchors = detect_anchors(&st.records, &st.actual, &st.expected, "synthetic", a.threshold, a.scope)?;
    Ok(Anchors {
        records: st.records,
        sets: vec![("synthetic".into(), anchors)],
    })
}

fn observed(run: &mut Run) -> Result<Anchors, CliError> {
    let cfg = run.cfg;
    let a = &cfg.approval;
    let followers_path = cfg.path_or(&cfg.data.followers, "followers.csv");
    let pairs = read_pairs(&followers_path)?;
    let ids: Vec<String> = pairs.iter().map(|p| p.0.clone()).collect();
    let followers: Vec<f64> = pairs
        .iter()
        .enumerate()
        .map(|(i, (_, v))| {
            v.parse()
                .map_err(|_| CliError::runtime(format!("{}:{}: bad follower count '{v}'", followers_path.display(), i + 2)))
        })
        .collect::<Result<_, _>>()?;
    let records = load_records(cfg.path_or(&cfg.data.records, "records.jsonl"), &ids)?;
    let authors = match &cfg.data.node_features {
        Some(p) => Some(load_node_features(p)?.aligned_to(&ids)),
        None => None,
    };
    let rows: Vec<usize> = (0..records.len()).collect();
    let parts = split(&rows, &a.split, a.split.seeds[0])?;
    let mut fits = Vec::new();
    let mut sets = Vec::new();
    for &metric in &a.metrics {
        let y = engagement_targets(&records, &followers, metric)?;
        let x = build_tweet_features(&records, authors.as_ref(), &followers, metric, a.window)?;
        let (model, report) = fit_expectation(&x.data, x.dim, &y, &parts.train, &parts.val, &parts.test, &a.expectation)?;
        let expected = model.predict(&x.data)?;
        fits.push(vec![
            metric.as_str().to_string(),
            num(report.r2_train),
            num(report.r2_val),
            num(report.r2_test),
            report.epochs.to_string(),
            report.best_epoch.to_string(),
        ]);
        sets.push((
            metric.as_str().to_string(),
            detect_anchors(&records, &y, &expected, metric.as_str(), a.threshold, a.scope)?,
        ));
    }
    let p = run.output("expectation.csv");
    write_csv(&p, &["metric", "r2_train", "r2_val", "r2_test", "epochs", "best_epoch"], fits)?;
    if sets.len() > 1 {
        let joint = sets[1..].iter().fold(sets[0].1.clone(), |acc, (_, s)| joint_anchors(&acc, s));
        let name = sets.iter().map(|s| s.0.as_str()).collect::<Vec<_>>().join("&");
        sets.push((name, joint));
    }
    Ok(Anchors { records, sets })
}

/// Expected-engagement anchors and the toxicity shift after them.
pub fn run(run: &mut Run, ks: &[usize], synth: bool) -> Result<(), CliError> {
    let cfg = run.cfg;
    let a = &cfg.approval;
    let ks = if ks.is_empty() { a.ks.as_slice() } else { ks };
    if ks.contains(&0) {
        return Err(CliError::config("every k must be >= 1", Some("k".into())));
    }
    let anchors = if synth { synthetic(run)? } else { observed(run)? };

    let p = run.output("anchors.csv");
    write_csv(
        &p,
        &["metric", "record", "author", "ordinal", "direction", "z"],
        anchors.sets.iter().flat_map(|(name, set)| {
            set.iter().map(move |e| {
                vec![
                    name.clone(),
                    e.record.to_string(),
                    e.author.to_string(),
                    e.ordinal.to_string(),
                    e.direction.as_str().to_string(),
                    num(e.z),
                ]
            })
        }),
    )?;

    let mut deltas = Vec::new();
    let mut summary = Vec::new();
    for (name, set) in &anchors.sets {
        for &k in ks {
            let dc = DeltaConfig {
                k,
                aggregator: a.aggregator,
                toxicity_index: a.toxicity_index,
                de_overlap: a.de_overlap,
            };
            let r = toxicity_delta(&anchors.records, set, &dc)?;
            for d in &r.rows {
                deltas.push(vec![
                    name.clone(),
                    k.to_string(),
                    d.record.to_string(),
                    d.author.to_string(),
                    d.direction.as_str().to_string(),
                    num(d.before),
                    num(d.after),
                    num(d.delta),
                ]);
            }
            let (u, p) = r.test.map_or((String::new(), String::new()), |t| (num(t.u), num(t.p)));
            summary.push(vec![
                name.clone(),
                k.to_string(),
                r.higher.n.to_string(),
                num(r.higher.mean_delta),
                num(r.higher.sd_delta),
                r.lower.n.to_string(),
                num(r.lower.mean_delta),
                num(r.lower.sd_delta),
                u,
                p,
                r.excluded_empty.to_string(),
                r.excluded_overlap.to_string(),
            ]);
        }
    }
    let p = run.output("toxicity_deltas.csv");
    write_csv(
        &p,
        &["metric", "k", "record", "author", "direction", "before", "after", "delta"],
        deltas,
    )?;
    let p = run.output("approval_summary.csv");
    write_csv(
        &p,
        &[
            "metric",
            "k",
            "higher_n",
            "higher_mean",
            "higher_sd",
            "lower_n",
            "lower_mean",
            "lower_sd",
            "u",
            "p",
            "excluded_empty",
            "excluded_overlap",
        ],
        summary,
    )?;
    Ok(())
}
