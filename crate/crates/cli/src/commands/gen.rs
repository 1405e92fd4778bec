use std::path::Path;

use serde_json::{json, Value};

use repcomp::dataset::{self, Dataset};
use repcomp::grammar::{self, GrammarParams};
use repcomp::langsys::{self, LanguageSystem, ObjectWorld};
use repcomp::lookup::{self, LookupParams};
use repcomp::{compositionality, ComplexityBreakdown};

use super::write_json;
use crate::args::GenCommand;
use crate::settings::{resolve, LangsysSettings};
use crate::{out_dir, CliResult};

pub fn run(cmd: &GenCommand, config: Option<&Path>, out: Option<&Path>) -> CliResult<()> {
    match cmd {
        GenCommand::Lookup { params, name } => {
            let (p, resolved) = resolve(&LookupParams::default(), config, "lookup", params)?;
            let dir = out_dir(out)?;
            let (ds, sidecar) = lookup_dataset(&p, resolved)?;
            save(&dir.join(name), &ds, &sidecar)
        }
        GenCommand::Grammar { params, print_grammar, name } => {
            let (p, resolved) = resolve(&GrammarParams::default(), config, "grammar", params)?;
            if *print_grammar {
                let spec = grammar::build_grammar(p.t, p.width, p.depth, p.k)?;
                print!("{}", spec.pretty());
                return Ok(());
            }
            let dir = out_dir(out)?;
            let (ds, sidecar) = grammar_dataset(&p, resolved)?;
            save(&dir.join(name), &ds, &sidecar)
        }
        GenCommand::Langsys { params, name } => {
            let (p, resolved) = resolve(&LangsysSettings::default(), config, "langsys", params)?;
            let dir = out_dir(out)?;
            let (ds, sidecar) = langsys_dataset(&p, resolved)?;
            save(&dir.join(name), &ds, &sidecar)
        }
    }
}

fn save(path: &Path, ds: &Dataset, sidecar: &Value) -> CliResult<()> {
    dataset::save_dataset(ds, path)?;
    write_json(&dataset::sidecar_path(path), sidecar)?;
    println!("{}", path.display());
    Ok(())
}

fn breakdown_json(generator: &str, config: Value, seed: u64, b: &ComplexityBreakdown) -> Value {
    json!({
        "generator": generator,
        "config": config,
        "seed": seed,
        "breakdown": b,
        "k_z": b.total(),
        "k_z_given_w": b.conditional(),
        "compositionality": compositionality(b).ok(),
    })
}

pub fn lookup_dataset(p: &LookupParams, config: Value) -> CliResult<(Dataset, Value)> {
    let s = lookup::generate(p)?;
    let b = lookup::complexity(&s.program, &s.tokens, &s.noise)?;
    let mut ds = Dataset::from_representation(&s.tokens, &s.z, Some(p.seed), "lookup")?;
    ds.meta.config = Some(config.clone());
    let mut sidecar = breakdown_json("lookup", config, p.seed, &b);
    sidecar["table_materialized"] = json!(s.program.table.is_materialized());
    Ok((ds, sidecar))
}

pub fn grammar_dataset(p: &GrammarParams, config: Value) -> CliResult<(Dataset, Value)> {
    let s = grammar::generate(p)?;
    let b = grammar::complexity(&s.program, &s.tokens, &s.noise)?;
    let mut ds = Dataset::from_representation(&s.tokens, &s.z, Some(p.seed), "grammar")?;
    ds.meta.config = Some(config.clone());
    let mut sidecar = breakdown_json("grammar", config, p.seed, &b);
    sidecar["rules"] = json!(s.program.spec.rule_count());
    Ok((ds, sidecar))
}

pub fn langsys_dataset(p: &LangsysSettings, config: Value) -> CliResult<(Dataset, Value)> {
    let world = ObjectWorld::new(p.attributes, p.values)?;
    let language = LanguageSystem::new(world, p.kind()?, p.seed)?;
    let records = langsys::emit_dataset(&language, p.repeats, p.seed)?;
    let mut ds = Dataset::from_records(records, language.vocab(), None, Some(p.seed), "langsys");
    ds.meta.config = Some(config.clone());
    let sidecar = json!({
        "generator": "langsys",
        "config": config,
        "seed": p.seed,
        "language": language.kind.name(),
        "world": world,
        "k_z": langsys::k_z_uniform(&world)?,
    });
    Ok((ds, sidecar))
}
