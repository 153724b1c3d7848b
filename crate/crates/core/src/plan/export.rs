//! Structured plan export. Bit rows and coset indices are hexadecimal.

use serde::Serialize;

use super::{KernelPlan, OpCount, PhaseStep, SectionAction};

#[derive(Serialize)]
struct PhaseCost {
    phase: usize,
    adds: u64,
    comps: u64,
    delta: u64,
}

#[derive(Serialize)]
struct RowShift {
    row: usize,
    shift: String,
}

#[derive(Serialize)]
struct PhaseExport {
    phase: usize,
    action: SectionAction,
    cost: OpCount,
    k_prime: usize,
    k_dprime: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    antisym_mask: Option<String>,
    pair_antisymmetric: bool,
    coset_rows: Vec<String>,
    s_rows: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    g_dprime: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    map_left: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    map_right: Vec<String>,
    offsets: Vec<RowShift>,
    residual: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    source_phase: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    reduction_map: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    omega: Vec<RowShift>,
}

#[derive(Serialize)]
struct SectionExport {
    x: usize,
    y: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    z: Option<usize>,
    buffer_len: usize,
    phases: Vec<PhaseExport>,
}

#[derive(Serialize)]
struct PlanExport {
    kernel: String,
    l: usize,
    tree: String,
    cost: Vec<PhaseCost>,
    total: OpCount,
    sections: Vec<SectionExport>,
}

fn hex(v: u64) -> String {
    format!("{v:x}")
}

fn shifts(rows: &[(usize, u64)]) -> Vec<RowShift> {
    rows.iter()
        .map(|&(row, h)| RowShift { row, shift: hex(h) })
        .collect()
}

fn phase(i: usize, s: &PhaseStep) -> PhaseExport {
    let d = s.decomposition.as_ref();
    PhaseExport {
        phase: i,
        action: s.action,
        cost: s.cost,
        k_prime: s.k_prime,
        k_dprime: s.k_dprime,
        antisym_mask: s.antisym_mask.map(hex),
        pair_antisymmetric: s.pair_antisymmetric,
        coset_rows: s.coset_rows.iter().map(|r| r.to_hex()).collect(),
        s_rows: s.s_rows.iter().map(|r| r.to_hex()).collect(),
        g_dprime: d.map(|d| d.g_dprime.iter().map(|r| r.to_hex()).collect()).unwrap_or_default(),
        map_left: d.map(|d| d.map_left.iter().copied().map(hex).collect()).unwrap_or_default(),
        map_right: d.map(|d| d.map_right.iter().copied().map(hex).collect()).unwrap_or_default(),
        offsets: shifts(&s.offsets),
        residual: s.residual.clone(),
        source_phase: s.source_phase,
        reduction_map: s.reduction_map().iter().copied().map(hex).collect(),
        omega: shifts(s.omega_rows()),
    }
}

/// The whole plan as pretty-printed JSON. Output depends only on the kernel
/// matrix, its name and the chosen tree.
pub fn export_json(plan: &KernelPlan) -> String {
    let c = plan.cost();
    let doc = PlanExport {
        kernel: plan.kernel().name().to_string(),
        l: plan.size(),
        tree: plan.tree().to_string(),
        cost: (0..plan.size())
            .map(|i| {
                let p = c.phase(i);
                PhaseCost {
                    phase: i,
                    adds: p.adds,
                    comps: p.comps,
                    delta: c.delta[i],
                }
            })
            .collect(),
        total: c.total(),
        sections: plan
            .nodes()
            .iter()
            .map(|n| SectionExport {
                x: n.x,
                y: n.y,
                z: n.z,
                buffer_len: n.buffer_len,
                phases: n
                    .steps
                    .iter()
                    .enumerate()
                    .filter_map(|(i, s)| s.as_ref().map(|s| phase(i, s)))
                    .collect(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("plan export serializes")
}
