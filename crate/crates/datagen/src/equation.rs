//! Core record types: equations, task categories, and split names.

use cayley_algebra::{GroupElement, LabelToken, OperatorKind};

/// One labeled training or evaluation item: `a ∘ b ∘ ... = label`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Equation {
    /// The operator applied between all operands.
    pub op: OperatorKind,
    /// Operand sequence, left to right. Always at least two elements.
    pub operands: Vec<GroupElement>,
    /// Ground-truth answer token.
    pub label: LabelToken,
}

impl Equation {
    /// Renders the equation in the on-disk / prompt text form,
    /// e.g. `z3 + z4 + z0 = z0`.
    pub fn render(&self) -> String {
        let mut s = String::new();
        for (i, el) in self.operands.iter().enumerate() {
            if i > 0 {
                s.push(' ');
                s.push_str(self.op.token());
                s.push(' ');
            }
            s.push_str(&el.to_string());
        }
        s.push_str(" = ");
        s.push_str(&self.label.to_string());
        s
    }
}

impl std::fmt::Display for Equation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.render())
    }
}

/// The seven dataset categories.
///
/// The first four pair an operator with the split discipline used to test the
/// matching algebraic law; the last three are noncommutative controls drawn
/// from the identical operand pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TaskTag {
    /// `+` equations under commutativity-family splits.
    PlusComm,
    /// `+` equations under identity-insertion splits.
    PlusIde,
    /// `op` (structured lookup) equations under commutativity-family splits.
    OplusComm,
    /// `op` equations under identity-insertion splits.
    OplusIde,
    /// `om` (cyclic-arrival count) control over the pooled operands.
    Ominus,
    /// `lt` (leftmost operand) control over the pooled operands.
    Left,
    /// `rt` (rightmost operand) control over the pooled operands.
    Right,
}

impl TaskTag {
    /// All categories in canonical order.
    pub const ALL: [TaskTag; 7] = [
        TaskTag::PlusComm,
        TaskTag::PlusIde,
        TaskTag::OplusComm,
        TaskTag::OplusIde,
        TaskTag::Ominus,
        TaskTag::Left,
        TaskTag::Right,
    ];

    /// Stable lowercase name used in file names, manifests, and metrics.
    pub fn name(self) -> &'static str {
        match self {
            TaskTag::PlusComm => "plus_comm",
            TaskTag::PlusIde => "plus_ide",
            TaskTag::OplusComm => "oplus_comm",
            TaskTag::OplusIde => "oplus_ide",
            TaskTag::Ominus => "ominus",
            TaskTag::Left => "left",
            TaskTag::Right => "right",
        }
    }

    /// Inverse of [`TaskTag::name`].
    pub fn from_name(name: &str) -> Option<TaskTag> {
        TaskTag::ALL.into_iter().find(|t| t.name() == name)
    }

    /// The operator this category evaluates.
    pub fn operator(self) -> OperatorKind {
        match self {
            TaskTag::PlusComm | TaskTag::PlusIde => OperatorKind::Plus,
            TaskTag::OplusComm | TaskTag::OplusIde => OperatorKind::Oplus,
            TaskTag::Ominus => OperatorKind::Ominus,
            TaskTag::Left => OperatorKind::Left,
            TaskTag::Right => OperatorKind::Right,
        }
    }
}

impl std::fmt::Display for TaskTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Which side of the train/test split a record belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    /// Training split.
    Train,
    /// Held-out evaluation split.
    Test,
}

impl Split {
    /// Stable lowercase name used in file names and metrics.
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

impl std::fmt::Display for Split {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}
