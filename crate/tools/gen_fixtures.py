#!/usr/bin/env python3
"""Regenerate the `.rfa` architecture fixtures under `fixtures/`.

The fixtures follow the layer layout of the reference implementations
(torchvision for most families, keras.applications for MobileNetV1 and
NASNet-A). Normalization and activation layers are omitted because they
are receptive-field neutral. Run from the repository root:

    python3 tools/gen_fixtures.py
"""

import math
import os
import sys

OUT_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "fixtures")


def make_divisible(v, divisor=8, min_value=None):
    if min_value is None:
        min_value = divisor
    new_v = max(min_value, int(v + divisor / 2) // divisor * divisor)
    if new_v < 0.9 * v:
        new_v += divisor
    return new_v


class Builder:
    def __init__(self, name, res, comment=None):
        self.lines = []
        self.name = name
        self.prev = "@input"
        self.lines.append(f"model {name} input {res}x{res}")
        if comment:
            for line in comment.strip().splitlines():
                self.lines.append(f"# {line}".rstrip())

    def comment(self, text):
        self.lines.append(f"# {text}")

    def _emit(self, vid, kind, attrs, frm):
        if frm is None:
            frm = [self.prev]
        if isinstance(frm, str):
            frm = [frm]
        parts = [f"{vid}: {kind}"] + [a for a in attrs if a]
        parts.append("from " + ",".join(frm))
        self.lines.append(" ".join(parts))
        self.prev = vid
        return vid

    def conv(self, vid, k, s=1, cin=0, cout=0, groups=1, bias=False, block=None, frm=None, d=1):
        attrs = [f"k={k}"]
        if s != 1:
            attrs.append(f"s={s}")
        if d != 1:
            attrs.append(f"d={d}")
        if cin or cout:
            attrs.append(f"c={cin}->{cout}")
        if groups != 1:
            attrs.append(f"g={groups}")
        if bias:
            attrs.append("bias")
        if block:
            attrs.append(f"block={block}")
        return self._emit(vid, "conv", attrs, frm)

    def dwconv(self, vid, k, s=1, ch=0, bias=False, block=None, frm=None, mult=1):
        attrs = [f"k={k}"]
        if s != 1:
            attrs.append(f"s={s}")
        if ch:
            attrs.append(f"c={ch}->{ch * mult}")
        if bias:
            attrs.append("bias")
        if block:
            attrs.append(f"block={block}")
        return self._emit(vid, "dwconv", attrs, frm)

    def pool(self, vid, k, s, block=None, frm=None):
        attrs = [f"k={k}"]
        if s != 1:
            attrs.append(f"s={s}")
        if block:
            attrs.append(f"block={block}")
        return self._emit(vid, "pool", attrs, frm)

    def simple(self, vid, kind, block=None, frm=None, cin=0, cout=0, bias=False):
        attrs = []
        if cin or cout:
            attrs.append(f"c={cin}->{cout}")
        if bias:
            attrs.append("bias")
        if block:
            attrs.append(f"block={block}")
        return self._emit(vid, kind, attrs, frm)

    def add(self, vid, frm, block=None):
        return self.simple(vid, "add", block=block, frm=frm)

    def concat(self, vid, frm, block=None):
        return self.simple(vid, "concat", block=block, frm=frm)

    def output(self, frm=None):
        return self.simple("out", "output", frm=frm)

    def text(self):
        return "\n".join(self.lines) + "\n"


# ---------------------------------------------------------------- VGG

VGG_CFGS = {
    "vgg11": [64, "M", 128, "M", 256, 256, "M", 512, 512, "M", 512, 512, "M"],
    "vgg13": [64, 64, "M", 128, 128, "M", 256, 256, "M", 512, 512, "M", 512, 512, "M"],
    "vgg16": [64, 64, "M", 128, 128, "M", 256, 256, 256, "M", 512, 512, 512, "M", 512, 512, 512, "M"],
    "vgg19": [64, 64, "M", 128, 128, "M", 256, 256, 256, 256, "M", 512, 512, 512, 512, "M",
              512, 512, 512, 512, "M"],
    # Refined VGG19: first pooling after the fourth convolution, then after every third.
    # Its minimum resolution drops from 268 to 220. The baseline is sometimes
    # quoted as 269, but the layer arithmetic of the unmodified network gives 268.
    "vgg19_refined": [64, 64, 128, 128, "M", 256, 256, 256, "M", 256, 512, 512, "M",
                      512, 512, 512, "M", 512, 512, 512, "M"],
}


def vgg(name, cfg, comment=None):
    b = Builder(name, 224, comment)
    cin = 3
    ci = pi = 0
    for v in cfg:
        if v == "M":
            pi += 1
            b.pool(f"pool{pi}", 2, 2)
        else:
            ci += 1
            b.conv(f"conv{ci}", 3, cin=cin, cout=v, bias=True)
            cin = v
    b.pool("avgpool", 1, 1)
    b.simple("fc1", "dense", cin=512 * 7 * 7, cout=4096, bias=True)
    b.simple("fc2", "dense", cin=4096, cout=4096, bias=True)
    b.simple("fc3", "dense", cin=4096, cout=1000, bias=True)
    b.output()
    return b


# ---------------------------------------------------------------- ResNet

def resnet(name, layers, bottleneck):
    b = Builder(name, 224)
    b.conv("stem", 7, s=2, cin=3, cout=64)
    b.pool("maxpool", 3, 2)
    inplanes = 64
    expansion = 4 if bottleneck else 1
    x = "maxpool"
    for si, (planes, n) in enumerate(zip([64, 128, 256, 512], layers)):
        stride = 1 if si == 0 else 2
        for bi in range(n):
            s = stride if bi == 0 else 1
            blk = f"l{si + 1}b{bi + 1}"
            p = blk
            if bottleneck:
                b.conv(f"{p}_c1", 1, cin=inplanes, cout=planes, block=blk, frm=x)
                b.conv(f"{p}_c2", 3, s=s, cin=planes, cout=planes, block=blk)
                last = b.conv(f"{p}_c3", 1, cin=planes, cout=planes * 4, block=blk)
            else:
                b.conv(f"{p}_c1", 3, s=s, cin=inplanes, cout=planes, block=blk, frm=x)
                last = b.conv(f"{p}_c2", 3, cin=planes, cout=planes, block=blk)
            skip = x
            if bi == 0 and (s != 1 or inplanes != planes * expansion):
                skip = b.conv(f"{p}_down", 1, s=s, cin=inplanes, cout=planes * expansion,
                              block=blk, frm=x)
            x = b.add(f"{p}_add", [skip, last], block=blk)
            inplanes = planes * expansion
    b.simple("avgpool", "gpool", frm=x)
    b.simple("fc", "dense", cin=inplanes, cout=1000, bias=True)
    b.output()
    return b


# ---------------------------------------------------------------- MobileNetV1 (keras)

def mobilenet_v1(name="mobilenet_v1", strided=(1, 3, 5, 7, 13), comment=None):
    # (pointwise filters, depthwise index) for depthwise layers 2..14
    filters = [64, 128, 128, 256, 256, 512, 512, 512, 512, 512, 512, 1024, 1024]
    b = Builder(name, 224, comment)
    b.conv("conv1", 3, s=2 if 1 in strided else 1, cin=3, cout=32)
    cin = 32
    for i, f in enumerate(filters):
        layer = i + 2
        s = 2 if layer in strided else 1
        blk = f"dw{layer}"
        b.dwconv(f"dw{layer}", 3, s=s, ch=cin, block=blk)
        b.conv(f"pw{layer}", 1, cin=cin, cout=f, block=blk)
        cin = f
    b.simple("gap", "gpool")
    b.simple("fc", "dense", cin=1024, cout=1000, bias=True)
    b.output()
    return b


# ---------------------------------------------------------------- MobileNetV2

def mobilenet_v2():
    cfg = [(1, 16, 1, 1), (6, 24, 2, 2), (6, 32, 3, 2), (6, 64, 4, 2),
           (6, 96, 3, 1), (6, 160, 3, 2), (6, 320, 1, 1)]
    b = Builder("mobilenet_v2", 224)
    x = b.conv("stem", 3, s=2, cin=3, cout=32)
    cin = 32
    idx = 0
    for t, c, n, s in cfg:
        for i in range(n):
            idx += 1
            stride = s if i == 0 else 1
            blk = f"ir{idx}"
            hidden = cin * t
            if t != 1:
                b.conv(f"{blk}_expand", 1, cin=cin, cout=hidden, block=blk, frm=x)
                b.dwconv(f"{blk}_dw", 3, s=stride, ch=hidden, block=blk)
            else:
                b.dwconv(f"{blk}_dw", 3, s=stride, ch=hidden, block=blk, frm=x)
            last = b.conv(f"{blk}_project", 1, cin=hidden, cout=c, block=blk)
            if stride == 1 and cin == c:
                x = b.add(f"{blk}_add", [x, last], block=blk)
            else:
                x = last
            cin = c
    b.conv("head", 1, cin=320, cout=1280, frm=x)
    b.simple("gap", "gpool")
    b.simple("fc", "dense", cin=1280, cout=1000, bias=True)
    b.output()
    return b


# ---------------------------------------------------------------- MobileNetV3

V3_LARGE = [
    (3, 16, 16, False, 1), (3, 64, 24, False, 2), (3, 72, 24, False, 1),
    (5, 72, 40, True, 2), (5, 120, 40, True, 1), (5, 120, 40, True, 1),
    (3, 240, 80, False, 2), (3, 200, 80, False, 1), (3, 184, 80, False, 1),
    (3, 184, 80, False, 1), (3, 480, 112, True, 1), (3, 672, 112, True, 1),
    (5, 672, 160, True, 2), (5, 960, 160, True, 1), (5, 960, 160, True, 1),
]
V3_SMALL = [
    (3, 16, 16, True, 2), (3, 72, 24, False, 2), (3, 88, 24, False, 1),
    (5, 96, 40, True, 2), (5, 240, 40, True, 1), (5, 240, 40, True, 1),
    (5, 120, 48, True, 1), (5, 144, 48, True, 1), (5, 288, 96, True, 2),
    (5, 576, 96, True, 1), (5, 576, 96, True, 1),
]


def squeeze_excite(b, blk, ch, squeeze, src):
    b.simple(f"{blk}_se_pool", "gpool", block=blk, frm=src)
    b.conv(f"{blk}_se_reduce", 1, cin=ch, cout=squeeze, bias=True, block=blk)
    b.conv(f"{blk}_se_expand", 1, cin=squeeze, cout=ch, bias=True, block=blk)
    return b.simple(f"{blk}_se_scale", "neutral", block=blk, frm=[src, f"{blk}_se_expand"])


def mobilenet_v3(name, cfg, last_channel):
    b = Builder(name, 224)
    x = b.conv("stem", 3, s=2, cin=3, cout=16)
    cin = 16
    for i, (k, exp, out, se, s) in enumerate(cfg):
        blk = f"b{i + 1}"
        src = x
        if exp != cin:
            src = b.conv(f"{blk}_expand", 1, cin=cin, cout=exp, block=blk, frm=x)
        h = b.dwconv(f"{blk}_dw", k, s=s, ch=exp, block=blk, frm=src)
        if se:
            h = squeeze_excite(b, blk, exp, make_divisible(exp // 4, 8), h)
        last = b.conv(f"{blk}_project", 1, cin=exp, cout=out, block=blk, frm=h)
        if s == 1 and cin == out:
            x = b.add(f"{blk}_add", [x, last], block=blk)
        else:
            x = last
        cin = out
    head = 6 * cin
    b.conv("head", 1, cin=cin, cout=head, frm=x)
    b.simple("gap", "gpool")
    b.simple("fc1", "dense", cin=head, cout=last_channel, bias=True)
    b.simple("fc2", "dense", cin=last_channel, cout=1000, bias=True)
    b.output()
    return b


# ---------------------------------------------------------------- MnasNet

def mnasnet(name="mnasnet1_0", alpha=1.0):
    depths = [make_divisible(d * alpha, 8, 8) if alpha != 1.0 else d
              for d in [32, 16, 24, 40, 80, 96, 192, 320]]
    b = Builder(name, 224)
    b.conv("stem", 3, s=2, cin=3, cout=depths[0])
    b.dwconv("stem_dw", 3, ch=depths[0])
    x = b.conv("stem_pw", 1, cin=depths[0], cout=depths[1])
    stacks = [(depths[1], depths[2], 3, 2, 3, 3), (depths[2], depths[3], 5, 2, 3, 3),
              (depths[3], depths[4], 5, 2, 6, 3), (depths[4], depths[5], 3, 1, 6, 2),
              (depths[5], depths[6], 5, 2, 6, 4), (depths[6], depths[7], 3, 1, 6, 1)]
    for si, (cin, cout, k, s, e, n) in enumerate(stacks):
        for bi in range(n):
            blk = f"s{si + 1}b{bi + 1}"
            stride = s if bi == 0 else 1
            inc = cin if bi == 0 else cout
            mid = inc * e
            b.conv(f"{blk}_expand", 1, cin=inc, cout=mid, block=blk, frm=x)
            b.dwconv(f"{blk}_dw", k, s=stride, ch=mid, block=blk)
            last = b.conv(f"{blk}_project", 1, cin=mid, cout=cout, block=blk)
            if stride == 1 and inc == cout:
                x = b.add(f"{blk}_add", [x, last], block=blk)
            else:
                x = last
    b.conv("head", 1, cin=depths[7], cout=1280, frm=x)
    b.simple("gap", "gpool")
    b.simple("fc", "dense", cin=1280, cout=1000, bias=True)
    b.output()
    return b


# ---------------------------------------------------------------- EfficientNet

EFF_BASE = [  # expand, kernel, stride, in, out, layers
    (1, 3, 1, 32, 16, 1), (6, 3, 2, 16, 24, 2), (6, 5, 2, 24, 40, 2),
    (6, 3, 2, 40, 80, 3), (6, 5, 1, 80, 112, 3), (6, 5, 2, 112, 192, 4),
    (6, 3, 1, 192, 320, 1),
]
EFF_SCALES = {  # width, depth, resolution
    "b0": (1.0, 1.0, 224), "b1": (1.0, 1.1, 240), "b2": (1.1, 1.2, 260),
    "b3": (1.2, 1.4, 300), "b4": (1.4, 1.8, 380), "b5": (1.6, 2.2, 456),
    "b6": (1.8, 2.6, 528), "b7": (2.0, 3.1, 600),
}


def efficientnet(variant):
    width, depth, res = EFF_SCALES[variant]
    ch = lambda c: make_divisible(c * width, 8)
    b = Builder(f"efficientnet_{variant}", res,
                "blocks are named s<stage>b<index>; block= groups one MBConv block")
    stem_out = ch(32)
    x = b.conv("stem", 3, s=2, cin=3, cout=stem_out)
    cin = stem_out
    for si, (e, k, s, _, out, n) in enumerate(EFF_BASE):
        cout = ch(out)
        for bi in range(int(math.ceil(n * depth))):
            blk = f"s{si + 1}b{bi + 1}"
            stride = s if bi == 0 else 1
            mid = make_divisible(cin * e, 8)
            src = x
            if mid != cin:
                src = b.conv(f"{blk}_expand", 1, cin=cin, cout=mid, block=blk, frm=x)
            h = b.dwconv(f"{blk}_dw", k, s=stride, ch=mid, block=blk, frm=src)
            h = squeeze_excite(b, blk, mid, max(1, cin // 4), h)
            last = b.conv(f"{blk}_project", 1, cin=mid, cout=cout, block=blk, frm=h)
            if stride == 1 and cin == cout:
                x = b.add(f"{blk}_add", [x, last], block=blk)
            else:
                x = last
            cin = cout
    head = 4 * ch(320)
    b.conv("head", 1, cin=cin, cout=head, frm=x)
    b.simple("gap", "gpool")
    b.simple("fc", "dense", cin=head, cout=1000, bias=True)
    b.output()
    return b


# ---------------------------------------------------------------- ConvNeXt

def convnext(name="convnext_t", depths=(3, 3, 9, 3), dims=(96, 192, 384, 768), patch=4):
    comment = None
    if patch != 4:
        comment = f"patchify stem reduced from 4x4 to {patch}x{patch} patches"
    b = Builder(name, 224, comment)
    x = b.conv("stem", patch, s=patch, cin=3, cout=dims[0], bias=True)
    for si, (n, d) in enumerate(zip(depths, dims)):
        if si > 0:
            x = b.conv(f"down{si}", 2, s=2, cin=dims[si - 1], cout=d, bias=True, frm=x)
        for bi in range(n):
            blk = f"s{si + 1}b{bi + 1}"
            b.dwconv(f"{blk}_dw", 7, ch=d, bias=True, block=blk, frm=x)
            b.conv(f"{blk}_pw1", 1, cin=d, cout=4 * d, bias=True, block=blk)
            last = b.conv(f"{blk}_pw2", 1, cin=4 * d, cout=d, bias=True, block=blk)
            x = b.add(f"{blk}_add", [x, last], block=blk)
    b.simple("gap", "gpool", frm=x)
    b.simple("fc", "dense", cin=dims[-1], cout=1000, bias=True)
    b.output()
    return b


# ---------------------------------------------------------------- NASNet-A (keras)

class Nasnet:
    def __init__(self, b):
        self.b = b
        self.n = 0

    def uid(self, prefix):
        self.n += 1
        return f"{prefix}{self.n}"

    def sep_block(self, cell, tag, src, cin, filters, k, s=1):
        b = self.b
        # each keras SeparableConv2D is a depthwise conv followed by a pointwise conv
        b.dwconv(f"{cell}_{tag}_dw1", k, s=s, ch=cin, block=cell, frm=src)
        b.conv(f"{cell}_{tag}_pw1", 1, cin=cin, cout=filters, block=cell)
        b.dwconv(f"{cell}_{tag}_dw2", k, ch=filters, block=cell)
        return b.conv(f"{cell}_{tag}_pw2", 1, cin=filters, cout=filters, block=cell)

    def adjust(self, cell, p, p_ch, p_stride_rel, ip_ch, filters):
        b = self.b
        if p is None:
            return None, None
        if p_stride_rel:
            b.pool(f"{cell}_adj_pool1", 1, 2, block=cell, frm=p)
            p1 = b.conv(f"{cell}_adj_conv1", 1, cin=p_ch, cout=filters // 2, block=cell)
            b.simple(f"{cell}_adj_shift", "neutral", block=cell, frm=p)
            b.pool(f"{cell}_adj_pool2", 1, 2, block=cell)
            p2 = b.conv(f"{cell}_adj_conv2", 1, cin=p_ch, cout=filters // 2, block=cell)
            return b.concat(f"{cell}_adj_cat", [p1, p2], block=cell), filters
        if p_ch != filters:
            return b.conv(f"{cell}_adj_proj", 1, cin=p_ch, cout=filters, block=cell, frm=p), filters
        return p, p_ch

    def normal(self, cell, ip, ip_ch, p, p_ch, p_reduced, filters):
        b = self.b
        pa, pa_ch = self.adjust(cell, p, p_ch, p_reduced, ip_ch, filters)
        if pa is None:
            pa, pa_ch = ip, ip_ch
        h = b.conv(f"{cell}_h", 1, cin=ip_ch, cout=filters, block=cell, frm=ip)
        x1a = self.sep_block(cell, "x1a", h, filters, filters, 5)
        x1b = self.sep_block(cell, "x1b", pa, pa_ch, filters, 3)
        x1 = b.add(f"{cell}_x1", [x1a, x1b], block=cell)
        x2a = self.sep_block(cell, "x2a", pa, pa_ch, filters, 5)
        x2b = self.sep_block(cell, "x2b", pa, pa_ch, filters, 3)
        x2 = b.add(f"{cell}_x2", [x2a, x2b], block=cell)
        b.pool(f"{cell}_x3_pool", 3, 1, block=cell, frm=h)
        x3 = b.add(f"{cell}_x3", [f"{cell}_x3_pool", pa], block=cell)
        b.pool(f"{cell}_x4_pool1", 3, 1, block=cell, frm=pa)
        b.pool(f"{cell}_x4_pool2", 3, 1, block=cell, frm=pa)
        x4 = b.add(f"{cell}_x4", [f"{cell}_x4_pool1", f"{cell}_x4_pool2"], block=cell)
        x5a = self.sep_block(cell, "x5", h, filters, filters, 3)
        x5 = b.add(f"{cell}_x5", [x5a, h], block=cell)
        out = b.concat(f"{cell}_out", [pa, x1, x2, x3, x4, x5], block=cell)
        return out, 6 * filters

    def reduction(self, cell, ip, ip_ch, p, p_ch, p_reduced, filters):
        b = self.b
        pa, pa_ch = self.adjust(cell, p, p_ch, p_reduced, ip_ch, filters)
        if pa is None:
            pa, pa_ch = ip, ip_ch
        h = b.conv(f"{cell}_h", 1, cin=ip_ch, cout=filters, block=cell, frm=ip)
        x1a = self.sep_block(cell, "x1a", h, filters, filters, 5, 2)
        x1b = self.sep_block(cell, "x1b", pa, pa_ch, filters, 7, 2)
        x1 = b.add(f"{cell}_x1", [x1a, x1b], block=cell)
        b.pool(f"{cell}_x2_pool", 3, 2, block=cell, frm=h)
        x2b = self.sep_block(cell, "x2b", pa, pa_ch, filters, 7, 2)
        x2 = b.add(f"{cell}_x2", [f"{cell}_x2_pool", x2b], block=cell)
        b.pool(f"{cell}_x3_pool", 3, 2, block=cell, frm=h)
        x3b = self.sep_block(cell, "x3b", pa, pa_ch, filters, 5, 2)
        x3 = b.add(f"{cell}_x3", [f"{cell}_x3_pool", x3b], block=cell)
        b.pool(f"{cell}_x4_pool", 3, 1, block=cell, frm=x1)
        x4 = b.add(f"{cell}_x4", [x2, f"{cell}_x4_pool"], block=cell)
        x5a = self.sep_block(cell, "x5a", x1, filters, filters, 3)
        b.pool(f"{cell}_x5_pool", 3, 2, block=cell, frm=h)
        x5 = b.add(f"{cell}_x5", [x5a, f"{cell}_x5_pool"], block=cell)
        out = b.concat(f"{cell}_out", [x2, x3, x4, x5], block=cell)
        return out, 4 * filters


def nasnet_mobile(name="nasnet_a_mobile", stem_stride=2, comment=None):
    penultimate, num_blocks, stem_filters, skip_reduction, mult = 1056, 4, 32, False, 2
    filters = penultimate // 24
    b = Builder(name, 224, comment)
    n = Nasnet(b)
    stem = b.conv("stem", 3, s=stem_stride, cin=3, cout=stem_filters)
    # (vertex, channels, scale) where scale counts stride-2 reductions
    x, x_ch, x_sc = stem, stem_filters, 0
    p, p_ch, p_sc = None, None, None

    def step(kind, cell, f):
        nonlocal x, x_ch, x_sc, p, p_ch, p_sc
        reduced = p is not None and p_sc != x_sc
        fn = n.normal if kind == "normal" else n.reduction
        out, out_ch = fn(cell, x, x_ch, p, p_ch, reduced, f)
        new_sc = x_sc + (1 if kind == "reduction" else 0)
        prev = (x, x_ch, x_sc)
        x, x_ch, x_sc = out, out_ch, new_sc
        return prev

    p, p_ch, p_sc = step("reduction", "stem1", filters // (mult ** 2))
    p, p_ch, p_sc = step("reduction", "stem2", filters // mult)
    for i in range(num_blocks):
        p, p_ch, p_sc = step("normal", f"n{i}", filters)
    p0 = step("reduction", f"r{num_blocks}", filters * mult)
    if not skip_reduction:
        p, p_ch, p_sc = p0
    for i in range(num_blocks):
        p, p_ch, p_sc = step("normal", f"n{num_blocks + i + 1}", filters * mult)
    p0 = step("reduction", f"r{2 * num_blocks}", filters * mult ** 2)
    if not skip_reduction:
        p, p_ch, p_sc = p0
    for i in range(num_blocks):
        p, p_ch, p_sc = step("normal", f"n{2 * num_blocks + i + 1}", filters * mult ** 2)
    b.simple("gap", "gpool", frm=x)
    b.simple("fc", "dense", cin=x_ch, cout=1000, bias=True)
    b.output()
    return b


# ---------------------------------------------------------------- DenseNet

def densenet121():
    growth, cfg, init = 32, (6, 12, 24, 16), 64
    b = Builder("densenet121", 224)
    b.conv("stem", 7, s=2, cin=3, cout=init)
    x = b.pool("pool0", 3, 2)
    ch = init
    for di, n in enumerate(cfg):
        feats = [x]
        for li in range(n):
            blk = f"d{di + 1}l{li + 1}"
            src = feats[0] if len(feats) == 1 else b.concat(f"{blk}_cat", list(feats), block=blk)
            b.conv(f"{blk}_c1", 1, cin=ch + li * growth, cout=4 * growth, block=blk, frm=src)
            feats.append(b.conv(f"{blk}_c2", 3, cin=4 * growth, cout=growth, block=blk))
        ch = ch + n * growth
        x = b.concat(f"d{di + 1}_out", list(feats))
        if di != len(cfg) - 1:
            b.conv(f"t{di + 1}_conv", 1, cin=ch, cout=ch // 2, frm=x)
            x = b.pool(f"t{di + 1}_pool", 2, 2)
            ch //= 2
    b.simple("gap", "gpool", frm=x)
    b.simple("fc", "dense", cin=ch, cout=1000, bias=True)
    b.output()
    return b


def all_fixtures():
    fx = {}
    for name in ["vgg11", "vgg13", "vgg16", "vgg19"]:
        fx[name] = vgg(name, VGG_CFGS[name])
    fx["vgg19_refined"] = vgg(
        "vgg19_refined", VGG_CFGS["vgg19_refined"],
        "pooling moved: first max-pool after the fourth convolution, then after every third")
    fx["resnet18"] = resnet("resnet18", [2, 2, 2, 2], False)
    fx["resnet34"] = resnet("resnet34", [3, 4, 6, 3], False)
    fx["resnet50"] = resnet("resnet50", [3, 4, 6, 3], True)
    fx["mobilenet_v1"] = mobilenet_v1()
    fx["mobilenet_v2"] = mobilenet_v2()
    fx["mobilenet_v3_small"] = mobilenet_v3("mobilenet_v3_small", V3_SMALL, 1024)
    fx["mobilenet_v3_large"] = mobilenet_v3("mobilenet_v3_large", V3_LARGE, 1280)
    fx["mnasnet1_0"] = mnasnet()
    for v in EFF_SCALES:
        fx[f"efficientnet_{v}"] = efficientnet(v)
    fx["convnext_t"] = convnext()
    fx["convnext_t_patch2"] = convnext("convnext_t_patch2", patch=2)
    fx["nasnet_a_mobile"] = nasnet_mobile()
    fx["densenet121"] = densenet121()
    return fx


def main():
    os.makedirs(OUT_DIR, exist_ok=True)
    for name, b in all_fixtures().items():
        with open(os.path.join(OUT_DIR, f"{name}.rfa"), "w") as f:
            f.write(b.text())
    print(f"wrote {len(all_fixtures())} fixtures to {os.path.normpath(OUT_DIR)}", file=sys.stderr)


if __name__ == "__main__":
    main()
