//! Media containers: RGB clips, depth clips, instance-id clips, masklets.

use crate::error::{Result, VideoError};

/// N frames of 8-bit RGB, row-major `[frame][y][x][rgb]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VideoClip {
    pub frames: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<u8>,
}

impl VideoClip {
    pub fn black(frames: usize, height: usize, width: usize) -> Self {
        Self {
            frames,
            height,
            width,
            data: vec![0; frames * height * width * 3],
        }
    }

    pub fn new(frames: usize, height: usize, width: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != frames * height * width * 3 {
            return Err(VideoError::Shape(format!(
                "clip data length {} != {}x{}x{}x3",
                data.len(),
                frames,
                height,
                width
            )));
        }
        Ok(Self {
            frames,
            height,
            width,
            data,
        })
    }

    pub fn frame(&self, t: usize) -> &[u8] {
        let sz = self.height * self.width * 3;
        &self.data[t * sz..(t + 1) * sz]
    }

    pub fn frame_mut(&mut self, t: usize) -> &mut [u8] {
        let sz = self.height * self.width * 3;
        &mut self.data[t * sz..(t + 1) * sz]
    }

    pub fn pixel(&self, t: usize, y: usize, x: usize) -> [u8; 3] {
        let i = ((t * self.height + y) * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn same_extents(&self, other: &Self) -> bool {
        (self.frames, self.height, self.width) == (other.frames, other.height, other.width)
    }

    /// Frame as an `[0,1]` f32 tensor `[3, 1, h, w]` (planar).
    pub fn frame_tensor(&self, t: usize) -> strata_core::Tensor<f32> {
        let hw = self.height * self.width;
        let src = self.frame(t);
        let mut data = vec![0f32; 3 * hw];
        for i in 0..hw {
            for c in 0..3 {
                data[c * hw + i] = src[i * 3 + c] as f32 / 255.0;
            }
        }
        strata_core::Tensor::new(&[3, 1, self.height, self.width], data).expect("layout")
    }

    /// Whole clip as an `[0,1]` f32 tensor `[3, frames, h, w]`.
    pub fn to_tensor(&self) -> strata_core::Tensor<f32> {
        let hw = self.height * self.width;
        let mut data = vec![0f32; 3 * self.frames * hw];
        for t in 0..self.frames {
            let src = self.frame(t);
            for i in 0..hw {
                for c in 0..3 {
                    data[(c * self.frames + t) * hw + i] = src[i * 3 + c] as f32 / 255.0;
                }
            }
        }
        strata_core::Tensor::new(&[3, self.frames, self.height, self.width], data).expect("layout")
    }

    /// Inverse of [`Self::to_tensor`], rounding and clamping to u8.
    pub fn from_tensor(t: &strata_core::Tensor<f32>) -> Self {
        let s = t.shape();
        assert_eq!(s[0], 3, "expected rgb tensor");
        let (frames, height, width) = (s[1], s[2], s[3]);
        let hw = height * width;
        let mut data = vec![0u8; frames * hw * 3];
        for f in 0..frames {
            for i in 0..hw {
                for c in 0..3 {
                    let v = t.data()[(c * frames + f) * hw + i];
                    data[(f * hw + i) * 3 + c] = (v.clamp(0.0, 1.0) * 255.0).round() as u8;
                }
            }
        }
        Self {
            frames,
            height,
            width,
            data,
        }
    }
}

/// Per-frame 32-bit depth planes (metres, positive).
#[derive(Clone, Debug, PartialEq)]
pub struct DepthClip {
    pub frames: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f32>,
}

impl DepthClip {
    pub fn filled(frames: usize, height: usize, width: usize, value: f32) -> Self {
        Self {
            frames,
            height,
            width,
            data: vec![value; frames * height * width],
        }
    }

    pub fn frame(&self, t: usize) -> &[f32] {
        let sz = self.height * self.width;
        &self.data[t * sz..(t + 1) * sz]
    }

    pub fn frame_mut(&mut self, t: usize) -> &mut [f32] {
        let sz = self.height * self.width;
        &mut self.data[t * sz..(t + 1) * sz]
    }
}

/// Per-frame instance labels; 0 is background, objects start at 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstanceClip {
    pub frames: usize,
    pub height: usize,
    pub width: usize,
    pub ids: Vec<u16>,
}

impl InstanceClip {
    pub fn empty(frames: usize, height: usize, width: usize) -> Self {
        Self {
            frames,
            height,
            width,
            ids: vec![0; frames * height * width],
        }
    }

    pub fn frame(&self, t: usize) -> &[u16] {
        let sz = self.height * self.width;
        &self.ids[t * sz..(t + 1) * sz]
    }

    pub fn frame_mut(&mut self, t: usize) -> &mut [u16] {
        let sz = self.height * self.width;
        &mut self.ids[t * sz..(t + 1) * sz]
    }

    pub fn labels(&self) -> Vec<u16> {
        let mut seen = vec![false; u16::MAX as usize + 1];
        for &id in &self.ids {
            seen[id as usize] = true;
        }
        (1..=u16::MAX)
            .filter(|&id| seen[id as usize])
            .collect()
    }
}

/// Spatial layer roles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LayerRole {
    Human,
    Occlusion,
    Scene,
}

impl LayerRole {
    pub fn as_str(self) -> &'static str {
        match self {
            LayerRole::Human => "human",
            LayerRole::Occlusion => "occlusion",
            LayerRole::Scene => "scene",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "human" => Ok(LayerRole::Human),
            "occlusion" => Ok(LayerRole::Occlusion),
            "scene" => Ok(LayerRole::Scene),
            other => Err(VideoError::Parse(format!("unknown layer role `{other}`"))),
        }
    }
}

/// A binary mask sequence for one layer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Masklet {
    pub role: LayerRole,
    pub frames: usize,
    pub height: usize,
    pub width: usize,
    /// One byte per pixel, strictly 0 or 1.
    pub data: Vec<u8>,
}

impl Masklet {
    pub fn zeros(role: LayerRole, frames: usize, height: usize, width: usize) -> Self {
        Self {
            role,
            frames,
            height,
            width,
            data: vec![0; frames * height * width],
        }
    }

    pub fn frame(&self, t: usize) -> &[u8] {
        let sz = self.height * self.width;
        &self.data[t * sz..(t + 1) * sz]
    }

    pub fn frame_mut(&mut self, t: usize) -> &mut [u8] {
        let sz = self.height * self.width;
        &mut self.data[t * sz..(t + 1) * sz]
    }

    pub fn count_ones(&self) -> usize {
        self.data.iter().filter(|&&v| v == 1).count()
    }
}

/// A clip with its depth, instance labels, and designated human instance.
#[derive(Clone, Debug)]
pub struct LayeredClip {
    pub video: VideoClip,
    pub depth: DepthClip,
    pub instances: InstanceClip,
    pub human_id: u16,
}
