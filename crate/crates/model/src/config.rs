//! Model geometry and architecture configuration shared by all graphs.

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelConfig {
    /// Square frame edge in pixels.
    pub frame_size: usize,
    /// Frames per clip (latent frames equal clip frames).
    pub frames: usize,
    /// VAE latent channels.
    pub latent_channels: usize,
    /// VAE spatial downsampling factor (two stride-2 stages).
    pub latent_down: usize,
    /// VAE encoder/decoder base width.
    pub vae_base: usize,
    /// Denoiser channels at full/half/quarter latent resolution.
    pub c1: usize,
    pub c2: usize,
    pub c3: usize,
    /// Group-norm groups.
    pub groups: usize,
    /// Sinusoidal time-embedding width.
    pub t_embed_dim: usize,
    /// Identity global-code width.
    pub id_global_dim: usize,
    /// Identity local-feature channels at the two attention sites.
    pub id_local16: usize,
    pub id_local8: usize,
    /// Per-vertex motion code dimension.
    pub motion_code_dim: usize,
    /// Diffusion steps and linear-beta endpoints.
    pub timesteps: usize,
    pub beta_start: f64,
    pub beta_end: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            frame_size: 128,
            frames: 8,
            latent_channels: 4,
            latent_down: 4,
            vae_base: 16,
            c1: 12,
            c2: 24,
            c3: 36,
            groups: 4,
            t_embed_dim: 32,
            id_global_dim: 32,
            id_local16: 24,
            id_local8: 32,
            motion_code_dim: 8,
            timesteps: 100,
            beta_start: 1e-4,
            beta_end: 0.02,
        }
    }
}

impl ModelConfig {
    pub fn latent_size(&self) -> usize {
        self.frame_size / self.latent_down
    }

    /// Shape of x_t / x0 / predicted noise.
    pub fn latent_shape(&self) -> [usize; 4] {
        [self.latent_channels, self.frames, self.latent_size(), self.latent_size()]
    }

    /// Shape of the concatenated scene+occlusion code.
    pub fn scene_code_shape(&self) -> [usize; 4] {
        [2 * self.latent_channels, self.frames, self.latent_size(), self.latent_size()]
    }

    /// Shape of the motion code (addition-compatible with the fused feature).
    pub fn motion_code_shape(&self) -> [usize; 4] {
        [self.c1, self.frames, self.latent_size(), self.latent_size()]
    }

    /// Shape of the stacked motion feature maps fed to the pose encoder
    /// (code planes plus the coverage plane, at frame resolution).
    pub fn motion_maps_shape(&self) -> [usize; 4] {
        [self.motion_code_dim + 1, self.frames, self.frame_size, self.frame_size]
    }

    pub fn canonical_shape(&self) -> [usize; 4] {
        [4, 1, self.frame_size, self.frame_size]
    }
}
