use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{FrameAnnotation, Task};

pub const DEFAULT_WINDOW: usize = 8;

/// Sliding window of past frames and the tasks issued on them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryBuffer {
    capacity: usize,
    frames: VecDeque<FrameAnnotation>,
    tasks: VecDeque<Task>,
}

impl Default for MemoryBuffer {
    fn default() -> Self {
        MemoryBuffer::new(DEFAULT_WINDOW).expect("default window is positive")
    }
}

impl MemoryBuffer {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidParameter(
                "memory window must be at least 1".into(),
            ));
        }
        Ok(MemoryBuffer {
            capacity,
            frames: VecDeque::with_capacity(capacity),
            tasks: VecDeque::new(),
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn frames(&self) -> impl DoubleEndedIterator<Item = &FrameAnnotation> + ExactSizeIterator {
        self.frames.iter()
    }

    pub fn tasks(&self) -> impl DoubleEndedIterator<Item = &Task> + ExactSizeIterator {
        self.tasks.iter()
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn latest(&self) -> Option<&FrameAnnotation> {
        self.frames.back()
    }

    pub fn frame_at(&self, t: usize) -> Option<&FrameAnnotation> {
        self.frames.iter().find(|f| f.t == t)
    }

    /// Fails unless every remembered frame precedes `t`.
    pub fn check_before(&self, t: usize) -> Result<()> {
        match self.frames.back() {
            Some(f) if f.t >= t => Err(Error::Validation(format!(
                "memory holds frame {} but the current frame is {t}",
                f.t
            ))),
            _ => Ok(()),
        }
    }

    /// Appends a frame (and the task issued on it, if any), evicting the oldest
    /// entries beyond capacity.
    pub fn push(&mut self, frame: FrameAnnotation, task: Option<Task>) -> Result<()> {
        self.check_before(frame.t)?;
        let t = frame.t;
        self.frames.push_back(frame);
        if let Some(task) = task {
            self.tasks.push_back(task);
        }
        while self.frames.len() > self.capacity {
            self.frames.pop_front();
        }
        let oldest = self.frames.front().map_or(t, |f| f.t);
        while self.tasks.front().is_some_and(|q| q.t < oldest) {
            self.tasks.pop_front();
        }
        Ok(())
    }
}
