//! DOT rendering of the two Hasse diagrams a band carries: the natural
//! partial order on its elements, and the structure semilattice of its
//! rectangular classes.

use bandkit::band::FiniteBand;
use bandkit::decomp::mclean_decompose;

/// Hasse diagram of the natural order `e <= f iff ef = fe = e`. Edges point
/// from the smaller to the larger element.
pub fn order_dot(band: &FiniteBand) -> String {
    let n = band.order();
    let labels: Vec<String> = (0..n).map(|e| band.label(e)).collect();
    hasse_dot("natural_order", &labels, |a, b| band.natural_leq(a, b))
}

/// Hasse diagram of the structure semilattice, nodes labeled with the class
/// dimensions.
pub fn semilattice_dot(band: &FiniteBand) -> String {
    let m = mclean_decompose(band);
    let y = m.y().clone();
    let labels: Vec<String> = (0..m.class_count())
        .map(|alpha| {
            let (r, c) = m.class_dims(alpha);
            format!("{alpha} ({r}x{c})")
        })
        .collect();
    hasse_dot("structure_semilattice", &labels, move |a, b| y.mul(a, b) == a)
}

fn hasse_dot(name: &str, labels: &[String], leq: impl Fn(usize, usize) -> bool) -> String {
    let n = labels.len();
    let mut out = format!("digraph {name} {{\n  rankdir=BT;\n");
    for (i, label) in labels.iter().enumerate() {
        out.push_str(&format!("  v{i} [label=\"{}\"];\n", label.replace('"', "\\\"")));
    }
    for a in 0..n {
        for b in 0..n {
            if a == b || !leq(a, b) {
                continue;
            }
            let covered =
                (0..n).any(|c| c != a && c != b && leq(a, c) && leq(c, b));
            if !covered {
                out.push_str(&format!("  v{a} -> v{b};\n"));
            }
        }
    }
    out.push_str("}\n");
    out
}
