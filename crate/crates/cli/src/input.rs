use std::path::Path;

use anyhow::{bail, Context, Result};
use supermart::model::json::{parse_chain, parse_system, ChainInput};
use supermart::model::System;

use crate::Mode;

pub enum Model {
    System(Box<System>),
    Chain(ChainInput),
}

impl Model {
    pub fn max_priority(&self) -> usize {
        match self {
            Model::System(s) => s.partition.max_priority,
            Model::Chain(c) => c.chain.max_priority(),
        }
    }

    pub fn mode_name(&self) -> &'static str {
        match self {
            Model::System(_) => "symbolic",
            Model::Chain(_) => "finite",
        }
    }
}

pub fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

pub fn load(path: &Path, mode: Mode) -> Result<Model> {
    let text = read(path)?;
    let value: serde_json::Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let finite = match mode {
        Mode::Auto => value.get("states").is_some(),
        Mode::Finite => true,
        Mode::Symbolic => false,
    };
    if finite {
        let chain = parse_chain(&text).with_context(|| format!("reading chain {}", path.display()))?;
        if chain.chain.is_empty() {
            bail!("{} has no states", path.display());
        }
        Ok(Model::Chain(chain))
    } else {
        let sys = parse_system(&text).with_context(|| format!("reading system {}", path.display()))?;
        Ok(Model::System(Box::new(sys)))
    }
}

pub fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, format!("{text}\n")).with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}
