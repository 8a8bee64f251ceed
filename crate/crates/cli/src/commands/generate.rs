use std::path::Path;

use log::info;
use petgraph::visit::EdgeRef;
use serde_json::json;

use nmfa::generators::{
    binomial_measure, cantor_set_profile, fractal_layered, toy_layered, wpam_schedule, ws_graph,
    FractalLayeredSpec, ToyMode, WpamParams, TOY_BASE_WEIGHT, TOY_RANDOM_RANGE,
};
use nmfa::io::{save_checkpoint, write_json, write_rows};
use nmfa::Result;

use crate::args::{GenerateKind, ToyModeArg};
use crate::commands::ensure_dir;

fn meta(out: &Path, value: serde_json::Value) -> Result<()> {
    write_json(&out.join("generate.meta.json"), &value)
}

pub fn run(kind: &GenerateKind) -> Result<()> {
    match kind {
        GenerateKind::Binomial { p, depth, out } => {
            let m = binomial_measure(*p, *depth)?;
            ensure_dir(out)?;
            let rows: Vec<Vec<String>> = m
                .masses
                .iter()
                .enumerate()
                .map(|(i, x)| vec![i.to_string(), x.to_string()])
                .collect();
            write_rows(&out.join("binomial.csv"), &["box", "mass"], &rows)?;
            meta(out, json!({ "kind": "binomial", "p": p, "depth": depth }))?;
        }
        GenerateKind::Cantor { depth, out } => {
            let profiles = cantor_set_profile(*depth)?;
            ensure_dir(out)?;
            let mut rows = Vec::new();
            for (k, prof) in profiles.iter().enumerate() {
                for (r, c) in prof.radii().iter().zip(prof.counts()) {
                    rows.push(vec![k.to_string(), r.to_string(), c.to_string()]);
                }
            }
            write_rows(&out.join("cantor.csv"), &["observer", "radius", "count"], &rows)?;
            meta(out, json!({ "kind": "cantor", "depth": depth }))?;
        }
        GenerateKind::Ws { n, k, beta, seed, out } => {
            let g = ws_graph(*n, *k, *beta, *seed)?;
            ensure_dir(out)?;
            let rows: Vec<Vec<String>> = g
                .edge_references()
                .map(|e| {
                    vec![
                        e.source().index().to_string(),
                        e.target().index().to_string(),
                        e.weight().to_string(),
                    ]
                })
                .collect();
            write_rows(&out.join("ws.csv"), &["source", "target", "weight"], &rows)?;
            meta(out, json!({ "kind": "ws", "n": n, "k": k, "beta": beta, "seed": seed }))?;
        }
        GenerateKind::Toy {
            layers,
            nodes,
            mode,
            level,
            seed,
            epoch,
            out,
        } => {
            let (mode, scheme) = match mode {
                ToyModeArg::Homogeneous => (
                    ToyMode::Homogeneous,
                    format!("every weight {TOY_BASE_WEIGHT}"),
                ),
                ToyModeArg::Heterogeneous => (
                    ToyMode::Heterogeneous { level: *level },
                    format!(
                        "outgoing weights of node a are {TOY_BASE_WEIGHT} * exp(level * u_a), u_a ~ U(-1, 1)"
                    ),
                ),
                ToyModeArg::Random => (
                    ToyMode::Random,
                    format!(
                        "independent weights ~ U({}, {})",
                        TOY_RANDOM_RANGE.0, TOY_RANDOM_RANGE.1
                    ),
                ),
            };
            let net = toy_layered(*layers, *nodes, mode, *seed)?;
            let manifest = save_checkpoint(&net, *epoch, out, "toy")?;
            meta(
                out,
                json!({ "kind": "toy", "layers": layers, "nodes": nodes, "mode": mode, "scheme": scheme, "seed": seed }),
            )?;
            info!("wrote {}", manifest.display());
        }
        GenerateKind::FractalLayered {
            target_d,
            layers,
            nodes,
            seed,
            out,
        } => {
            let spec = FractalLayeredSpec::new(*target_d, *layers, *nodes, *seed);
            let net = fractal_layered(&spec)?;
            let manifest = save_checkpoint(&net, 0, out, "fractal")?;
            meta(out, json!({ "kind": "fractal-layered", "spec": spec }))?;
            info!("wrote {}", manifest.display());
        }
        GenerateKind::WpamSeries {
            layers,
            nodes,
            iterations,
            every,
            delta,
            iota,
            seed,
            out,
        } => {
            let params = WpamParams {
                delta: *delta,
                iota: *iota,
                iterations: *iterations,
            };
            params.validate()?;
            let net = toy_layered(*layers, *nodes, ToyMode::Random, *seed)?;
            let checkpoints = wpam_schedule(&net, &params, *every, *iterations)?;
            let mut listed = Vec::new();
            for (it, net) in &checkpoints {
                let stem = format!("wpam_{it:04}");
                save_checkpoint(net, *it, out, &stem)?;
                listed.push(format!("{stem}.toml"));
            }
            meta(
                out,
                json!({ "kind": "wpam-series", "layers": layers, "nodes": nodes, "params": params,
                        "every": every, "seed": seed, "checkpoints": listed }),
            )?;
            info!("wrote {} checkpoints to {}", listed.len(), out.display());
        }
    }
    Ok(())
}
