"""
Color scheme definitions for consistent styling across figures.
"""

# Primary Color Palette
PRIMARY = {
    "blue": "#0B1730",      # Deep navy background
    "light_blue": "#1E293B", # Card background
    "accent": "#60A5FA",    # Sky blue accent
    "accent_pink": "#F472B6", # Pink accent
    "white": "#FFFFFF",
}

# One color per training stage
STAGE_COLORS = {
    1: "#60A5FA",  # L_XE
    2: "#10B981",  # L_S
    3: "#F59E0B",  # L_M^I
    4: "#F472B6",  # L_I
}

# Attention heatmaps
HEATMAP_SCALE = "Blues"

# Typography Colors
TEXT = {
    "primary": "#E5EEFF",
    "secondary": "#94A3B8",
    "muted": "#64748B",
}

# Background Colors
BACKGROUND = {
    "main": "#0B1730",
    "card": "#1E293B",
    "grid": "rgba(255,255,255,0.06)",
}
