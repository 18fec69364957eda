use std::collections::VecDeque;

/// A registered value: writes made during an edge become visible after the
/// owning domain commits.
#[derive(Debug, Clone)]
pub struct Reg<T> {
    current: T,
    next: Option<T>,
}

impl<T: Clone + PartialEq> Reg<T> {
    pub fn new(value: T) -> Self {
        Reg {
            current: value,
            next: None,
        }
    }

    pub fn get(&self) -> &T {
        &self.current
    }

    pub fn set(&mut self, value: T) {
        self.next = Some(value);
    }

    /// Returns true when the visible value changed.
    pub fn commit(&mut self) -> bool {
        match self.next.take() {
            Some(v) if v != self.current => {
                self.current = v;
                true
            }
            _ => false,
        }
    }
}

impl<T: Clone + PartialEq + Default> Default for Reg<T> {
    fn default() -> Self {
        Reg::new(T::default())
    }
}

/// Same-domain message queue with registered visibility.
#[derive(Debug, Clone)]
pub struct Mailbox<T> {
    visible: VecDeque<T>,
    staged: Vec<T>,
}

impl<T> Default for Mailbox<T> {
    fn default() -> Self {
        Mailbox {
            visible: VecDeque::new(),
            staged: Vec::new(),
        }
    }
}

impl<T> Mailbox<T> {
    pub fn post(&mut self, item: T) {
        self.staged.push(item);
    }

    pub fn peek(&self) -> Option<&T> {
        self.visible.front()
    }

    pub fn pop(&mut self) -> Option<T> {
        self.visible.pop_front()
    }

    pub fn is_empty(&self) -> bool {
        self.visible.is_empty() && self.staged.is_empty()
    }

    pub fn commit(&mut self) {
        self.visible.extend(self.staged.drain(..));
    }
}
