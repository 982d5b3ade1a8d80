use std::io::Read;
use std::path::Path;

use bratnet::diagram::from_generator_spec;
use bratnet::graph::GeneralGraph;
use bratnet::{Diagram, LevelFunction, VertexId};

use crate::manifest::RunManifest;
use crate::Failure;

/// Reads a file, or stdin for `-`.
pub fn read_source(path: &str) -> Result<Vec<u8>, Failure> {
    if path == "-" {
        let mut buf = Vec::new();
        std::io::stdin().read_to_end(&mut buf).map_err(|e| Failure::domain(format!("reading stdin: {e}")))?;
        Ok(buf)
    } else {
        std::fs::read(path).map_err(|e| Failure::domain(format!("reading {path}: {e}")))
    }
}

fn utf8(bytes: Vec<u8>, what: &str) -> Result<String, Failure> {
    String::from_utf8(bytes).map_err(|_| Failure::domain(format!("{what} is not UTF-8")))
}

/// A diagram from a file, stdin, or generator shorthand. Anything that is
/// not an existing path and contains `:` is read as shorthand.
pub fn load_diagram(arg: &str, m: &mut RunManifest) -> Result<Diagram, Failure> {
    if arg != "-" && !Path::new(arg).exists() && arg.contains(':') {
        m.input_generator("diagram", arg);
        return Ok(from_generator_spec(arg)?);
    }
    let bytes = read_source(arg)?;
    m.input_bytes("diagram", &bytes);
    Ok(Diagram::parse(&utf8(bytes, arg)?)?)
}

pub fn load_function(arg: &str, name: &str, d: &Diagram, m: &mut RunManifest) -> Result<LevelFunction, Failure> {
    let bytes = read_source(arg)?;
    m.input_bytes(name, &bytes);
    Ok(LevelFunction::parse(&utf8(bytes, arg)?, d)?)
}

pub fn load_graph(bytes: Vec<u8>, arg: &str) -> Result<GeneralGraph, Failure> {
    Ok(GeneralGraph::parse(&utf8(bytes, arg)?)?)
}

/// `level,index`.
pub fn parse_vertex(s: &str) -> Result<VertexId, String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected `level,index`, got `{s}`"))?;
    let level = a.trim().parse().map_err(|_| format!("bad level in `{s}`"))?;
    let index = b.trim().parse().map_err(|_| format!("bad index in `{s}`"))?;
    Ok(VertexId::new(level, index))
}

/// `level,index=value`.
pub fn parse_pin(s: &str) -> Result<(VertexId, f64), String> {
    let (v, x) = s.split_once('=').ok_or_else(|| format!("expected `level,index=value`, got `{s}`"))?;
    let value = x.trim().parse().map_err(|_| format!("bad value in `{s}`"))?;
    Ok((parse_vertex(v)?, value))
}

pub fn parse_usize_list(s: &str) -> Result<Vec<usize>, String> {
    s.split(',').map(|t| t.trim().parse().map_err(|_| format!("bad integer `{t}`"))).collect()
}
