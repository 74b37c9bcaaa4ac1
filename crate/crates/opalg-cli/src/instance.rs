//! Instance files: line-delimited JSON with a schema-version field.
//!
//! A file holds one instance per line; the first non-empty line is the one
//! loaded (extra well-formed lines are ignored with a warning). Complex
//! entries are `[re, im]` pairs; ragged matrices are rejected.

use serde::Deserialize;

use opalg::algebra::{diagonal_algebra, StarAlgebra};
use opalg::cpmap::CpMap;
use opalg::gauge::CircleAction;
use opalg::{Mat, C64};

pub const SCHEMA_VERSION: u32 = 1;

/// Errors are split by exit-code class: parse/validation problems exit 2.
#[derive(Debug)]
pub enum LoadError {
    Parse(String),
    Validation(String),
}

impl std::fmt::Display for LoadError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LoadError::Parse(m) => write!(f, "parse error: {m}"),
            LoadError::Validation(m) => write!(f, "validation error: {m}"),
        }
    }
}

impl std::error::Error for LoadError {}

type RawMatrix = Vec<Vec<[f64; 2]>>;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstance {
    v: u32,
    dim: usize,
    #[serde(default)]
    algebra_basis: Option<Vec<RawMatrix>>,
    #[serde(default)]
    subalgebra_basis: Option<Vec<RawMatrix>>,
    #[serde(default)]
    projection: Option<RawMatrix>,
    #[serde(default)]
    cp_map: Option<RawCpMap>,
    #[serde(default)]
    weights: Option<Vec<i64>>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    tolerance: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCpMap {
    kind: String,
    payload: serde_json::Value,
}

/// A validated instance with the derived objects the suites consume.
#[derive(Debug, Clone)]
pub struct Instance {
    pub dim: usize,
    pub algebra: StarAlgebra,
    pub subalgebra: Option<StarAlgebra>,
    pub projection: Option<Mat>,
    pub cp_map: Option<CpMap>,
    pub action: Option<CircleAction>,
    pub seed: u64,
    /// Per-check threshold override carried by the file (the --tol flag wins).
    pub tolerance: Option<f64>,
    pub warnings: Vec<String>,
}

fn parse_matrix(raw: &RawMatrix, rows: usize, cols: usize, what: &str) -> Result<Mat, LoadError> {
    if raw.len() != rows {
        return Err(LoadError::Validation(format!(
            "{what}: expected {rows} rows, got {}",
            raw.len()
        )));
    }
    let width = raw.first().map_or(0, |r| r.len());
    if raw.iter().any(|r| r.len() != width) {
        return Err(LoadError::Parse(format!("{what}: ragged rows")));
    }
    if width != cols {
        return Err(LoadError::Validation(format!(
            "{what}: expected {cols} columns, got {width}"
        )));
    }
    let pairs: Vec<Vec<(f64, f64)>> = raw
        .iter()
        .map(|row| row.iter().map(|&[re, im]| (re, im)).collect())
        .collect();
    Mat::from_rows(&pairs).map_err(|e| LoadError::Parse(format!("{what}: {e}")))
}

fn parse_cp_map(raw: &RawCpMap, dim: usize) -> Result<CpMap, LoadError> {
    match raw.kind.as_str() {
        "choi" => {
            #[derive(Deserialize)]
            struct Payload {
                out_dim: usize,
                matrix: RawMatrix,
            }
            let p: Payload = serde_json::from_value(raw.payload.clone())
                .map_err(|e| LoadError::Parse(format!("choi payload: {e}")))?;
            let side = dim * p.out_dim;
            let m = parse_matrix(&p.matrix, side, side, "choi matrix")?;
            CpMap::from_choi(dim, p.out_dim, m).map_err(|e| LoadError::Validation(e.to_string()))
        }
        "kraus" => {
            #[derive(Deserialize)]
            struct Payload {
                operators: Vec<RawMatrix>,
            }
            let p: Payload = serde_json::from_value(raw.payload.clone())
                .map_err(|e| LoadError::Parse(format!("kraus payload: {e}")))?;
            if p.operators.is_empty() {
                return Err(LoadError::Validation("empty kraus family".into()));
            }
            let out_dim = p.operators[0].len();
            let ops = p
                .operators
                .iter()
                .map(|raw| parse_matrix(raw, out_dim, dim, "kraus operator"))
                .collect::<Result<Vec<_>, _>>()?;
            CpMap::from_kraus(dim, out_dim, &ops).map_err(|e| LoadError::Validation(e.to_string()))
        }
        "state" => {
            #[derive(Deserialize)]
            struct Payload {
                #[serde(default)]
                vector: Option<Vec<[f64; 2]>>,
                #[serde(default)]
                density: Option<RawMatrix>,
            }
            let p: Payload = serde_json::from_value(raw.payload.clone())
                .map_err(|e| LoadError::Parse(format!("state payload: {e}")))?;
            if let Some(v) = p.vector {
                if v.len() != dim {
                    return Err(LoadError::Validation("state vector dimension".into()));
                }
                let entries: Vec<C64> = v.iter().map(|&[re, im]| C64::new(re, im)).collect();
                let x = Mat::col_vec(&entries);
                let norm = x.fro_norm();
                if norm < 1e-12 {
                    return Err(LoadError::Validation("state vector is zero".into()));
                }
                Ok(CpMap::vector_state(&x.scale_re(1.0 / norm)))
            } else if let Some(d) = p.density {
                let rho = parse_matrix(&d, dim, dim, "density")?;
                Ok(CpMap::from_density(&rho))
            } else {
                Err(LoadError::Validation(
                    "state payload needs vector or density".into(),
                ))
            }
        }
        other => Err(LoadError::Validation(format!(
            "unknown cp_map kind {other:?}"
        ))),
    }
}

fn build_algebra(
    raws: &[RawMatrix],
    dim: usize,
    what: &str,
    warnings: &mut Vec<String>,
) -> Result<StarAlgebra, LoadError> {
    let mats = raws
        .iter()
        .map(|raw| parse_matrix(raw, dim, dim, what))
        .collect::<Result<Vec<_>, _>>()?;
    let alg = StarAlgebra::from_generators(dim, &mats)
        .map_err(|e| LoadError::Validation(format!("{what}: {e}")))?;
    // from_generators always closes; warn when the input span was not
    // already closed (the closure grew the basis beyond span{I, inputs}).
    let preclosure = opalg::linalg::orthonormalize(
        &{
            let mut items = vec![Mat::identity(dim)];
            items.extend(mats.iter().cloned());
            items
        },
        1e-12,
    );
    if alg.dim() != preclosure.len()
        || mats
            .iter()
            .any(|m| opalg::linalg::span_residual(m, &preclosure) > 1e-10 * m.fro_norm().max(1.0))
    {
        warnings.push(format!(
            "{what}: provided span was not closed; closure applied ({} -> {} dimensions)",
            preclosure.len(),
            alg.dim()
        ));
    }
    Ok(alg)
}

pub fn parse_instance_line(line: &str) -> Result<Instance, LoadError> {
    let raw: RawInstance =
        serde_json::from_str(line).map_err(|e| LoadError::Parse(e.to_string()))?;
    if raw.v != SCHEMA_VERSION {
        return Err(LoadError::Validation(format!(
            "unsupported schema version {} (expected {SCHEMA_VERSION})",
            raw.v
        )));
    }
    if raw.dim == 0 || raw.dim > 8 {
        return Err(LoadError::Validation(format!(
            "ambient dimension {} out of the supported range 1..=8",
            raw.dim
        )));
    }
    let mut warnings = Vec::new();
    let dim = raw.dim;
    let algebra = match &raw.algebra_basis {
        Some(basis) => build_algebra(basis, dim, "algebra_basis", &mut warnings)?,
        None => StarAlgebra::full(dim),
    };
    let subalgebra = match &raw.subalgebra_basis {
        Some(basis) => {
            let alg = build_algebra(basis, dim, "subalgebra_basis", &mut warnings)?;
            if !algebra.contains_algebra(&alg) {
                return Err(LoadError::Validation(
                    "subalgebra_basis does not lie inside algebra_basis".into(),
                ));
            }
            Some(alg)
        }
        None => None,
    };
    let projection = match &raw.projection {
        Some(p) => {
            let m = parse_matrix(p, dim, dim, "projection")?;
            let idem = (&m.matmul(&m) - &m).fro_norm();
            if idem > 1e-8 || m.herm_residual() > 1e-8 {
                return Err(LoadError::Validation(format!(
                    "projection fails p = p^* = p^2 (residual {:.3e})",
                    idem.max(m.herm_residual())
                )));
            }
            Some(m)
        }
        None => None,
    };
    let cp_map = match &raw.cp_map {
        Some(c) => Some(parse_cp_map(c, dim)?),
        None => None,
    };
    let action = match &raw.weights {
        Some(w) => {
            if w.len() != dim {
                return Err(LoadError::Validation(
                    "weights length must equal dim".into(),
                ));
            }
            Some(CircleAction::new(w.clone()))
        }
        None => None,
    };
    Ok(Instance {
        dim,
        algebra,
        subalgebra,
        projection,
        cp_map,
        action,
        seed: raw.seed.unwrap_or(0),
        tolerance: raw.tolerance,
        warnings,
    })
}

pub fn load_instance(path: &std::path::Path) -> Result<Instance, LoadError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| LoadError::Parse(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let first = lines
        .next()
        .ok_or_else(|| LoadError::Parse("file holds no instance lines".into()))?;
    let mut instance = parse_instance_line(first)?;
    let mut extra = 0usize;
    for line in lines {
        // Remaining lines must still be well-formed instances.
        parse_instance_line(line)?;
        extra += 1;
    }
    if extra > 0 {
        instance.warnings.push(format!(
            "{extra} additional instance line(s) ignored; using the first"
        ));
    }
    Ok(instance)
}

impl Instance {
    /// Default projection when none is supplied: diag(1..1, 0..0) with
    /// ceil(n/2) ones.
    pub fn projection_or_default(&self) -> Mat {
        match &self.projection {
            Some(p) => p.clone(),
            None => {
                let ones = self.dim.div_ceil(2);
                Mat::from_fn(self.dim, self.dim, |i, j| {
                    if i == j && i < ones {
                        C64::new(1.0, 0.0)
                    } else {
                        C64::new(0.0, 0.0)
                    }
                })
            }
        }
    }

    /// Default subalgebra when none is supplied: the diagonal algebra.
    pub fn subalgebra_or_default(&self) -> StarAlgebra {
        match &self.subalgebra {
            Some(b) => b.clone(),
            None => diagonal_algebra(self.dim),
        }
    }

    /// Default state: the vector state at the first basis vector.
    pub fn cp_map_or_default(&self) -> CpMap {
        match &self.cp_map {
            Some(c) => c.clone(),
            None => CpMap::vector_state(&Mat::basis_vec(self.dim, 0)),
        }
    }

    /// Default circle action: weights `0, 1, .., n-1`.
    pub fn action_or_default(&self) -> CircleAction {
        match &self.action {
            Some(a) => a.clone(),
            None => CircleAction::new((0..self.dim as i64).collect()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_instance_loads() {
        let inst = parse_instance_line(r#"{"v":1,"dim":2,"seed":7}"#).unwrap();
        assert_eq!(inst.dim, 2);
        assert_eq!(inst.seed, 7);
        assert_eq!(inst.algebra.dim(), 4);
        assert!(inst.warnings.is_empty());
    }

    #[test]
    fn ragged_matrix_is_a_parse_error() {
        let line = r#"{"v":1,"dim":2,"projection":[[[1,0],[0,0]],[[0,0]]]}"#;
        assert!(matches!(
            parse_instance_line(line),
            Err(LoadError::Parse(_))
        ));
    }

    #[test]
    fn unclosed_subalgebra_is_completed_with_warning() {
        // Generator X alone: span{I, X} is not product-closed; closure
        // grows it to span{I, X} -- actually X^2 = I, so it is closed.
        // Use a rank-one non-projection instead: E_01 + E_10 is X; take
        // instead the single generator [[0,1],[0,0]] whose closure is M_2.
        let line = r#"{"v":1,"dim":2,"subalgebra_basis":[[[[0,0],[1,0]],[[0,0],[0,0]]]]}"#;
        let inst = parse_instance_line(line).unwrap();
        assert_eq!(inst.subalgebra.as_ref().unwrap().dim(), 4);
        assert!(!inst.warnings.is_empty());
    }

    #[test]
    fn bad_projection_rejected() {
        let line = r#"{"v":1,"dim":2,"projection":[[[2,0],[0,0]],[[0,0],[0,0]]]}"#;
        assert!(matches!(
            parse_instance_line(line),
            Err(LoadError::Validation(_))
        ));
    }

    #[test]
    fn wrong_version_rejected() {
        assert!(matches!(
            parse_instance_line(r#"{"v":2,"dim":2}"#),
            Err(LoadError::Validation(_))
        ));
    }

    #[test]
    fn cp_map_kinds_parse() {
        let kraus = r#"{"v":1,"dim":2,"cp_map":{"kind":"kraus","payload":{"operators":[[[[1,0],[0,0]],[[0,0],[1,0]]]]}}}"#;
        let inst = parse_instance_line(kraus).unwrap();
        let phi = inst.cp_map.unwrap();
        assert_eq!(phi.out_dim(), 2);
        assert!(phi.is_unital(1e-10));

        let state =
            r#"{"v":1,"dim":2,"cp_map":{"kind":"state","payload":{"vector":[[1,0],[0,0]]}}}"#;
        let inst = parse_instance_line(state).unwrap();
        assert_eq!(inst.cp_map.unwrap().out_dim(), 1);

        // Choi form of the identity channel on M_1 embedded in dim 2:
        // a 4x4 matrix for out_dim 2 (the identity channel's Choi).
        let choi = r#"{"v":1,"dim":2,"cp_map":{"kind":"choi","payload":{"out_dim":2,"matrix":[[[1,0],[0,0],[0,0],[1,0]],[[0,0],[0,0],[0,0],[0,0]],[[0,0],[0,0],[0,0],[0,0]],[[1,0],[0,0],[0,0],[1,0]]]}}}"#;
        let inst = parse_instance_line(choi).unwrap();
        let phi = inst.cp_map.unwrap();
        assert_eq!(phi.out_dim(), 2);
        // This is the Choi matrix of the identity map: apply and compare.
        let x =
            Mat::from_rows(&[vec![(1.0, 0.0), (2.0, 0.5)], vec![(0.0, -1.0), (3.0, 0.0)]]).unwrap();
        assert!((&phi.apply(&x) - &x).fro_norm() < 1e-12);
        // Wrong-sized choi matrix is rejected.
        let bad = r#"{"v":1,"dim":2,"cp_map":{"kind":"choi","payload":{"out_dim":2,"matrix":[[[1,0]]]}}}"#;
        assert!(matches!(
            parse_instance_line(bad),
            Err(LoadError::Validation(_))
        ));
    }
}
