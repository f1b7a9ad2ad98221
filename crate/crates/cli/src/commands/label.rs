use super::load_graph;
use crate::data::{read_profiles, write_csv};
use crate::error::CliError;
use crate::manifest::Run;
use serde_json::json;
use socweave::labeling::{combine_labels, label_from_hashtags, label_from_media, label_propagation, Lexicon, SeedLabels};

/// Hashtag and media pseudo-labels for graph users, optionally spread by
/// label propagation.
pub fn run(run: &mut Run) -> Result<(), CliError> {
    let cfg = run.cfg;
    let g = load_graph(cfg)?;
    let mut lex = Lexicon::builtin();
    if let Some(p) = &cfg.data.hashtags {
        lex.load_hashtags_csv(p)?;
    }
    if let Some(p) = &cfg.data.media {
        lex.load_media_csv(p)?;
    }
    let profiles = read_profiles(&cfg.path_or(&cfg.data.profiles, "profiles.jsonl"))?;
    let mut seeds = SeedLabels::new(g.node_count());
    let mut outside = 0usize;
    for (id, row) in &profiles {
        let Some(v) = g.index_of(id) else {
            outside += 1;
            continue;
        };
        let h = label_from_hashtags(&row.profile, &lex);
        let m = label_from_media(&row.endorsements, &lex);
        if let Some((side, prov)) = combine_labels(h, m.side) {
            seeds.set(v, side, prov);
        }
    }
    let p = run.output("seed_labels.csv");
    seeds.write_csv(g.ids(), &p)?;

    let mut report = json!({
        "profiles": profiles.len(),
        "profiles_outside_graph": outside,
        "seeds": seeds.labeled_count(),
    });
    if cfg.label.propagate {
        let prop = label_propagation(&g, &seeds, &cfg.label.etypes, cfg.label.max_iters)?;
        let p = run.output("propagated_labels.csv");
        write_csv(
            &p,
            &["node", "label"],
            prop.labels
                .iter()
                .enumerate()
                .filter_map(|(v, s)| s.map(|s| vec![g.id(v).to_string(), s.as_str().to_string()])),
        )?;
        report["propagated"] = json!(prop.labels.iter().filter(|s| s.is_some()).count());
        report["iterations"] = json!(prop.iterations);
        report["converged"] = json!(prop.converged);
    }
    run.write_json("label_report.json", &report)?;
    Ok(())
}
