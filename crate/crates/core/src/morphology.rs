//! Modular robot bodies: parsing, planar grid layout and joint adjacency.
//!
//! A body is a rooted tree of modules. The core sits at the root, bricks
//! branch the tree and active hinges are the actuated joints. Each hinge
//! carries exactly one oscillator once the body is compiled into a CPG,
//! so the joint adjacency computed here fixes the controller topology.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MorphologyError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: duplicate module id `{id}`")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: module `{id}` refers to unknown parent `{parent}`")]
    UnknownParent {
        line: usize,
        id: String,
        parent: String,
    },
    #[error("line {line}: module `{id}` is part of a parent cycle")]
    CycleDetected { line: usize, id: String },
    #[error("line {line}: second core module `{id}`")]
    MultipleCores { line: usize, id: String },
    #[error("no core module declared")]
    MissingCore,
    #[error("line {line}: module `{id}` cannot use slot {slot} ({reason})")]
    IllegalSlot {
        line: usize,
        id: String,
        slot: u8,
        reason: &'static str,
    },
    #[error("modules `{first}` and `{second}` both occupy cell ({gx}, {gy})")]
    GridCollision {
        first: String,
        second: String,
        gx: i32,
        gy: i32,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModuleKind {
    Core,
    Brick,
    ActiveHinge,
}

impl ModuleKind {
    /// Highest slot index a module of this kind may host children in.
    fn max_slot(self) -> u8 {
        match self {
            ModuleKind::Core => 3,
            ModuleKind::Brick => 2,
            ModuleKind::ActiveHinge => 0,
        }
    }

    pub fn keyword(self) -> &'static str {
        match self {
            ModuleKind::Core => "core",
            ModuleKind::Brick => "brick",
            ModuleKind::ActiveHinge => "hinge",
        }
    }
}

impl FromStr for ModuleKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "core" => Ok(ModuleKind::Core),
            "brick" => Ok(ModuleKind::Brick),
            "hinge" => Ok(ModuleKind::ActiveHinge),
            other => Err(format!("unknown module kind `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Module {
    pub id: String,
    pub kind: ModuleKind,
    pub parent: Option<String>,
    pub slot: u8,
    /// 1-based line in the source file, kept for diagnostics.
    pub line: usize,
}

/// A validated body plan. Modules are kept in file order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MorphologyTree {
    name: String,
    modules: Vec<Module>,
    index: HashMap<String, usize>,
}

impl MorphologyTree {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn modules(&self) -> &[Module] {
        &self.modules
    }

    pub fn module(&self, id: &str) -> Option<&Module> {
        self.index.get(id).map(|&i| &self.modules[i])
    }

    pub fn core(&self) -> &Module {
        self.modules
            .iter()
            .find(|m| m.kind == ModuleKind::Core)
            .expect("validated tree has a core")
    }

    /// Active hinge ids in file order.
    pub fn joints(&self) -> impl Iterator<Item = &Module> {
        self.modules
            .iter()
            .filter(|m| m.kind == ModuleKind::ActiveHinge)
    }

    pub fn joint_count(&self) -> usize {
        self.joints().count()
    }

    /// Children of `id` in file order.
    pub fn children<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a Module> + 'a {
        self.modules
            .iter()
            .filter(move |m| m.parent.as_deref() == Some(id))
    }

    /// The same body reflected across its longitudinal axis (slots 1 and 2 swapped).
    pub fn mirrored(&self) -> MorphologyTree {
        let modules = self
            .modules
            .iter()
            .map(|m| {
                let slot = match m.slot {
                    1 if m.parent.is_some() => 2,
                    2 if m.parent.is_some() => 1,
                    s => s,
                };
                Module { slot, ..m.clone() }
            })
            .collect();
        MorphologyTree {
            name: format!("{}-mirrored", self.name),
            modules,
            index: self.index.clone(),
        }
    }

    /// Render in the line-based morphology format.
    pub fn to_text(&self) -> String {
        let mut out = format!("morphology {}\n", self.name);
        for m in &self.modules {
            out.push_str(&format!(
                "{} {} {} {}\n",
                m.id,
                m.kind.keyword(),
                m.parent.as_deref().unwrap_or("-"),
                m.slot
            ));
        }
        out
    }

    /// Module path from `id` up to the root, inclusive on both ends.
    fn ancestry<'a>(&'a self, id: &'a str) -> Vec<&'a str> {
        let mut path = vec![];
        let mut cur = Some(id);
        while let Some(c) = cur {
            path.push(c);
            cur = self.module(c).and_then(|m| m.parent.as_deref());
        }
        path
    }
}

/// Parse a morphology description.
///
/// ```text
/// # comment
/// morphology spider9
/// C    core  -    0
/// L0H0 hinge C    0
/// ```
pub fn parse_morphology(text: &str) -> Result<MorphologyTree, MorphologyError> {
    let mut name = None;
    let mut modules: Vec<Module> = vec![];
    let mut index = HashMap::new();
    let mut core_seen = false;

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.trim();
        if content.is_empty() || content.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        if name.is_none() {
            match fields.as_slice() {
                ["morphology", n] => {
                    name = Some(n.to_string());
                    continue;
                }
                _ => {
                    return Err(MorphologyError::Syntax {
                        line,
                        message: "expected header `morphology <name>`".into(),
                    })
                }
            }
        }
        let [id, kind, parent, slot] = fields.as_slice() else {
            return Err(MorphologyError::Syntax {
                line,
                message: format!(
                    "expected `<id> <kind> <parent|-> <slot>`, found {} fields",
                    fields.len()
                ),
            });
        };
        let kind: ModuleKind = kind
            .parse()
            .map_err(|message| MorphologyError::Syntax { line, message })?;
        let slot: u8 = slot.parse().map_err(|_| MorphologyError::Syntax {
            line,
            message: format!("slot `{slot}` is not an integer in 0..3"),
        })?;
        let id = id.to_string();
        if index.contains_key(&id) {
            return Err(MorphologyError::DuplicateId { line, id });
        }
        let parent = match (*parent, kind) {
            ("-", ModuleKind::Core) => None,
            (p, ModuleKind::Core) => {
                return Err(MorphologyError::Syntax {
                    line,
                    message: format!("core module cannot have parent `{p}`"),
                })
            }
            ("-", _) => {
                return Err(MorphologyError::UnknownParent {
                    line,
                    id,
                    parent: "-".into(),
                })
            }
            (p, _) => Some(p.to_string()),
        };
        if kind == ModuleKind::Core {
            if core_seen {
                return Err(MorphologyError::MultipleCores { line, id });
            }
            core_seen = true;
            if slot != 0 {
                return Err(MorphologyError::IllegalSlot {
                    line,
                    id,
                    slot,
                    reason: "the core line must use slot 0",
                });
            }
        }
        index.insert(id.clone(), modules.len());
        modules.push(Module {
            id,
            kind,
            parent,
            slot,
            line,
        });
    }

    let Some(name) = name else {
        return Err(MorphologyError::Syntax {
            line: text.lines().count().max(1),
            message: "missing header `morphology <name>`".into(),
        });
    };
    if !core_seen {
        return Err(MorphologyError::MissingCore);
    }

    let mut used_slots: HashSet<(&str, u8)> = HashSet::new();
    for m in &modules {
        let Some(parent_id) = m.parent.as_deref() else {
            continue;
        };
        let Some(&pi) = index.get(parent_id) else {
            return Err(MorphologyError::UnknownParent {
                line: m.line,
                id: m.id.clone(),
                parent: parent_id.to_string(),
            });
        };
        let parent_kind = modules[pi].kind;
        if m.slot > parent_kind.max_slot() {
            return Err(MorphologyError::IllegalSlot {
                line: m.line,
                id: m.id.clone(),
                slot: m.slot,
                reason: match parent_kind {
                    ModuleKind::Core => "slots run 0..3",
                    ModuleKind::Brick => "brick slot 3 faces its parent",
                    ModuleKind::ActiveHinge => "a hinge only exposes slot 0",
                },
            });
        }
        if !used_slots.insert((parent_id, m.slot)) {
            return Err(MorphologyError::IllegalSlot {
                line: m.line,
                id: m.id.clone(),
                slot: m.slot,
                reason: "slot already occupied",
            });
        }
    }

    // Every module must reach the core by following parent links.
    for m in &modules {
        let mut seen = HashSet::new();
        let mut cur = m;
        while let Some(p) = cur.parent.as_deref() {
            if !seen.insert(cur.id.as_str()) {
                return Err(MorphologyError::CycleDetected {
                    line: m.line,
                    id: m.id.clone(),
                });
            }
            cur = &modules[index[p]];
        }
    }

    Ok(MorphologyTree {
        name,
        modules,
        index,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Heading {
    PosX,
    PosY,
    NegX,
    NegY,
}

impl Heading {
    /// Quarter turns counter-clockwise.
    fn rotate(self, quarter_turns: u8) -> Heading {
        const ORDER: [Heading; 4] = [Heading::PosX, Heading::PosY, Heading::NegX, Heading::NegY];
        let i = ORDER.iter().position(|&h| h == self).unwrap();
        ORDER[(i + quarter_turns as usize) % 4]
    }

    pub fn unit(self) -> (i32, i32) {
        match self {
            Heading::PosX => (1, 0),
            Heading::PosY => (0, 1),
            Heading::NegX => (-1, 0),
            Heading::NegY => (0, -1),
        }
    }

    /// Direction a child in `slot` faces, given this parent heading.
    pub fn for_slot(self, slot: u8) -> Heading {
        match slot {
            0 => self,
            1 => self.rotate(1),
            2 => self.rotate(3),
            _ => self.rotate(2),
        }
    }
}

impl fmt::Display for Heading {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Heading::PosX => "+x",
            Heading::PosY => "+y",
            Heading::NegX => "-x",
            Heading::NegY => "-y",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Placement {
    pub gx: i32,
    pub gy: i32,
    pub heading: Heading,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridLayout {
    placements: BTreeMap<String, Placement>,
}

impl GridLayout {
    pub fn get(&self, id: &str) -> Option<Placement> {
        self.placements.get(id).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Placement)> {
        self.placements.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.placements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.placements.is_empty()
    }

    /// Largest |gx| or |gy| over all modules.
    pub fn extent(&self) -> i32 {
        self.placements
            .values()
            .map(|p| p.gx.abs().max(p.gy.abs()))
            .max()
            .unwrap_or(0)
    }
}

/// Place every module on the unit grid. The core sits at the origin facing +x;
/// a child sits one cell away from its parent in the direction given by the
/// parent's heading and the slot.
pub fn layout(tree: &MorphologyTree) -> Result<GridLayout, MorphologyError> {
    let core = tree.core();
    let mut placements = BTreeMap::new();
    let mut occupied: HashMap<(i32, i32), String> = HashMap::new();
    placements.insert(
        core.id.clone(),
        Placement {
            gx: 0,
            gy: 0,
            heading: Heading::PosX,
        },
    );
    occupied.insert((0, 0), core.id.clone());

    let mut queue = std::collections::VecDeque::from([core.id.as_str()]);
    while let Some(pid) = queue.pop_front() {
        let parent = placements[pid];
        for child in tree.children(pid) {
            let heading = parent.heading.for_slot(child.slot);
            let (dx, dy) = heading.unit();
            let cell = (parent.gx + dx, parent.gy + dy);
            if let Some(other) = occupied.get(&cell) {
                return Err(MorphologyError::GridCollision {
                    first: other.clone(),
                    second: child.id.clone(),
                    gx: cell.0,
                    gy: cell.1,
                });
            }
            occupied.insert(cell, child.id.clone());
            placements.insert(
                child.id.clone(),
                Placement {
                    gx: cell.0,
                    gy: cell.1,
                    heading,
                },
            );
            queue.push_back(child.id.as_str());
        }
    }
    Ok(GridLayout { placements })
}

/// Neighbouring joint pairs, each ordered `(a, b)` with `a < b` and the list
/// sorted lexicographically.
///
/// Two hinges are neighbours when the tree path between them passes through
/// no other hinge and through at most one non-hinge module.
pub fn joint_adjacency(tree: &MorphologyTree) -> Vec<(String, String)> {
    let mut joints: Vec<&str> = tree.joints().map(|m| m.id.as_str()).collect();
    joints.sort_unstable();
    let ancestry: HashMap<&str, Vec<&str>> =
        joints.iter().map(|&j| (j, tree.ancestry(j))).collect();

    let mut pairs = vec![];
    for (i, &a) in joints.iter().enumerate() {
        for &b in &joints[i + 1..] {
            let intermediates = path_interior(&ancestry[a], &ancestry[b]);
            let hinge_between = intermediates
                .iter()
                .any(|id| tree.module(id).map(|m| m.kind) == Some(ModuleKind::ActiveHinge));
            if !hinge_between && intermediates.len() <= 1 {
                pairs.push((a.to_string(), b.to_string()));
            }
        }
    }
    pairs
}

/// Interior nodes of the tree path between the heads of two root-ward paths.
fn path_interior<'a>(up_a: &[&'a str], up_b: &[&'a str]) -> Vec<&'a str> {
    let on_b: HashMap<&str, usize> = up_b.iter().enumerate().map(|(i, &n)| (n, i)).collect();
    let (ia, ib) = up_a
        .iter()
        .enumerate()
        .find_map(|(i, n)| on_b.get(n).map(|&j| (i, j)))
        .expect("nodes of one tree share the root");
    let mut path: Vec<&str> = up_a[..=ia].to_vec();
    path.extend(up_b[..ib].iter().rev());
    path[1..path.len() - 1].to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;

    const SPIDER_LEG: &str = "\
morphology tiny
C core - 0
A hinge C 0
B brick A 0
D hinge B 0
";

    #[test]
    fn single_core() {
        let t = parse_morphology("morphology solo\nC core - 0\n").unwrap();
        assert_eq!(t.modules().len(), 1);
        assert_eq!(t.joint_count(), 0);
        let l = layout(&t).unwrap();
        assert_eq!(
            l.get("C"),
            Some(Placement {
                gx: 0,
                gy: 0,
                heading: Heading::PosX
            })
        );
        assert!(joint_adjacency(&t).is_empty());
    }

    #[test]
    fn two_cores_rejected() {
        let err = parse_morphology("morphology x\nC core - 0\nD core - 0\n").unwrap_err();
        assert_eq!(
            err,
            MorphologyError::MultipleCores {
                line: 3,
                id: "D".into()
            }
        );
    }

    #[test]
    fn error_paths_name_the_line() {
        let dup = parse_morphology("morphology x\nC core - 0\nA hinge C 0\nA brick C 1\n");
        assert!(matches!(
            dup,
            Err(MorphologyError::DuplicateId { line: 4, .. })
        ));

        let unknown = parse_morphology("morphology x\nC core - 0\nA hinge Z 0\n");
        assert!(matches!(
            unknown,
            Err(MorphologyError::UnknownParent { line: 3, .. })
        ));

        let hinge_slot = parse_morphology("morphology x\nC core - 0\nA hinge C 0\nB brick A 1\n");
        assert!(matches!(
            hinge_slot,
            Err(MorphologyError::IllegalSlot {
                line: 4,
                slot: 1,
                ..
            })
        ));

        let brick_slot = parse_morphology("morphology x\nC core - 0\nA brick C 0\nB brick A 3\n");
        assert!(matches!(
            brick_slot,
            Err(MorphologyError::IllegalSlot {
                line: 4,
                slot: 3,
                ..
            })
        ));

        let cycle = parse_morphology("morphology x\nC core - 0\nA brick B 0\nB brick A 0\n");
        assert!(matches!(
            cycle,
            Err(MorphologyError::CycleDetected { line: 3, .. })
        ));

        let taken = parse_morphology("morphology x\nC core - 0\nA brick C 1\nB brick C 1\n");
        assert!(matches!(
            taken,
            Err(MorphologyError::IllegalSlot { line: 4, .. })
        ));

        assert_eq!(
            parse_morphology("morphology x\nA brick - 0\n").unwrap_err(),
            MorphologyError::UnknownParent {
                line: 2,
                id: "A".into(),
                parent: "-".into()
            }
        );
        assert_eq!(
            parse_morphology("morphology x\n"),
            Err(MorphologyError::MissingCore)
        );
        assert!(matches!(
            parse_morphology("C core - 0\n"),
            Err(MorphologyError::Syntax { line: 1, .. })
        ));
    }

    #[test]
    fn slot_one_turns_left() {
        let t = parse_morphology("morphology x\nC core - 0\nA brick C 1\n").unwrap();
        assert_eq!(
            layout(&t).unwrap().get("A"),
            Some(Placement {
                gx: 0,
                gy: 1,
                heading: Heading::PosY
            })
        );
    }

    #[test]
    fn collision_detected() {
        // A ring of bricks that closes back on the core's neighbour cell.
        let text =
            "morphology ring\nC core - 0\nA brick C 0\nB brick A 1\nD brick B 1\nE brick D 1\n";
        let t = parse_morphology(text).unwrap();
        assert!(matches!(
            layout(&t),
            Err(MorphologyError::GridCollision { .. })
        ));
    }

    #[test]
    fn leg_adjacency() {
        let t = parse_morphology(SPIDER_LEG).unwrap();
        assert_eq!(
            joint_adjacency(&t),
            vec![("A".to_string(), "D".to_string())]
        );
    }

    #[test]
    fn direct_hinge_chain_and_blocking_hinge() {
        let text = "morphology h\nC core - 0\nA hinge C 0\nB hinge A 0\nD hinge B 0\n";
        let t = parse_morphology(text).unwrap();
        assert_eq!(
            joint_adjacency(&t),
            vec![
                ("A".to_string(), "B".to_string()),
                ("B".to_string(), "D".to_string())
            ]
        );
    }

    #[test]
    fn single_hinge_has_no_pairs() {
        let t = parse_morphology("morphology h\nC core - 0\nA hinge C 0\n").unwrap();
        assert!(joint_adjacency(&t).is_empty());
    }

    #[test]
    fn two_bricks_break_adjacency() {
        let text = "morphology h\nC core - 0\nA hinge C 0\nB brick C 1\nD hinge B 0\n";
        let t = parse_morphology(text).unwrap();
        assert!(joint_adjacency(&t).is_empty());
    }

    #[test]
    fn mirror_swaps_lateral_cells() {
        let text = "morphology m\nC core - 0\nA hinge C 1\nB brick C 0\nD hinge B 2\n";
        let t = parse_morphology(text).unwrap();
        let l = layout(&t).unwrap();
        let m = layout(&t.mirrored()).unwrap();
        for (id, p) in l.iter() {
            let q = m.get(id).unwrap();
            assert_eq!((p.gx, -p.gy), (q.gx, q.gy), "{id}");
        }
    }

    #[test]
    fn text_roundtrip() {
        let t = parse_morphology(SPIDER_LEG).unwrap();
        let again = parse_morphology(&t.to_text()).unwrap();
        assert_eq!(t.modules().len(), again.modules().len());
        assert_eq!(joint_adjacency(&t), joint_adjacency(&again));
    }
}
