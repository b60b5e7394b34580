#!/usr/bin/env python3
"""Structural validator for glTF 2.0 files.

Checks the constraints of the glTF 2.0 specification that matter for static
textured meshes: required fields, cross-reference indices, buffer/bufferView/
accessor bounds and alignment, POSITION min/max exactness, index ranges,
enum values, alpha-mode rules, and external resource presence. Exits 0 when
no errors were found; prints one line per finding.

Usage: validate_gltf.py <scene.gltf>
"""
import json
import math
import os
import struct
import sys

COMPONENT_TYPES = {
    5120: ("b", 1), 5121: ("B", 1), 5122: ("h", 2),
    5123: ("H", 2), 5125: ("I", 4), 5126: ("f", 4),
}
TYPE_COUNTS = {"SCALAR": 1, "VEC2": 2, "VEC3": 3, "VEC4": 4,
               "MAT2": 4, "MAT3": 9, "MAT4": 16}
PRIMITIVE_MODES = {0, 1, 2, 3, 4, 5, 6}
ALPHA_MODES = {"OPAQUE", "MASK", "BLEND"}
FILTERS_MAG = {9728, 9729}
FILTERS_MIN = {9728, 9729, 9984, 9985, 9986, 9987}
WRAPS = {33071, 33648, 10497}


class Validator:
    def __init__(self, path):
        self.path = path
        self.dir = os.path.dirname(os.path.abspath(path))
        self.errors = []
        self.warnings = []

    def error(self, msg):
        self.errors.append(msg)

    def warn(self, msg):
        self.warnings.append(msg)

    def check_index(self, value, array_name, count, context):
        if not isinstance(value, int) or value < 0 or value >= count:
            self.error(f"{context}: index {value} out of range for {array_name} (size {count})")
            return False
        return True

    def run(self):
        try:
            with open(self.path, "rb") as f:
                doc = json.loads(f.read().decode("utf-8"))
        except Exception as exc:
            self.error(f"cannot parse JSON: {exc}")
            return False

        asset = doc.get("asset")
        if not isinstance(asset, dict) or "version" not in asset:
            self.error("asset.version is required")
        elif not str(asset["version"]).startswith("2."):
            self.error(f"unsupported glTF version {asset['version']}")

        for key in ("buffers", "bufferViews", "accessors", "meshes", "nodes", "scenes",
                    "materials", "textures", "images", "samplers"):
            if key in doc and (not isinstance(doc[key], list) or len(doc[key]) == 0):
                self.error(f"{key} must be a non-empty array when present")

        buffers = doc.get("buffers", [])
        views = doc.get("bufferViews", [])
        accessors = doc.get("accessors", [])
        meshes = doc.get("meshes", [])
        nodes = doc.get("nodes", [])
        scenes = doc.get("scenes", [])
        materials = doc.get("materials", [])
        textures = doc.get("textures", [])
        images = doc.get("images", [])
        samplers = doc.get("samplers", [])

        buffer_data = []
        for i, buf in enumerate(buffers):
            if "byteLength" not in buf:
                self.error(f"buffers[{i}]: byteLength is required")
                buffer_data.append(b"")
                continue
            data = b""
            uri = buf.get("uri")
            if uri is None:
                self.error(f"buffers[{i}]: only external uri buffers are expected here")
            else:
                full = os.path.join(self.dir, uri)
                if not os.path.exists(full):
                    self.error(f"buffers[{i}]: uri {uri} does not exist")
                else:
                    with open(full, "rb") as f:
                        data = f.read()
                    if len(data) < buf["byteLength"]:
                        self.error(f"buffers[{i}]: file shorter ({len(data)}) than byteLength "
                                   f"({buf['byteLength']})")
            buffer_data.append(data)

        for i, view in enumerate(views):
            if "buffer" not in view or "byteLength" not in view:
                self.error(f"bufferViews[{i}]: buffer and byteLength are required")
                continue
            if not self.check_index(view["buffer"], "buffers", len(buffers), f"bufferViews[{i}]"):
                continue
            offset = view.get("byteOffset", 0)
            end = offset + view["byteLength"]
            if end > buffers[view["buffer"]].get("byteLength", 0):
                self.error(f"bufferViews[{i}]: extends past buffer end ({end})")
            if "byteStride" in view and not (4 <= view["byteStride"] <= 252):
                self.error(f"bufferViews[{i}]: invalid byteStride")
            if "target" in view and view["target"] not in (34962, 34963):
                self.error(f"bufferViews[{i}]: invalid target {view['target']}")

        accessor_values = []
        for i, acc in enumerate(accessors):
            values = None
            for req in ("componentType", "count", "type"):
                if req not in acc:
                    self.error(f"accessors[{i}]: {req} is required")
            ctype = acc.get("componentType")
            atype = acc.get("type")
            count = acc.get("count", 0)
            if ctype not in COMPONENT_TYPES:
                self.error(f"accessors[{i}]: unknown componentType {ctype}")
            elif atype not in TYPE_COUNTS:
                self.error(f"accessors[{i}]: unknown type {atype}")
            elif count < 1:
                self.error(f"accessors[{i}]: count must be >= 1")
            elif "bufferView" in acc:
                if self.check_index(acc["bufferView"], "bufferViews", len(views),
                                    f"accessors[{i}]"):
                    view = views[acc["bufferView"]]
                    fmt, size = COMPONENT_TYPES[ctype]
                    ncomp = TYPE_COUNTS[atype]
                    total = size * ncomp * count
                    byte_offset = acc.get("byteOffset", 0)
                    if (byte_offset + view.get("byteOffset", 0)) % size != 0:
                        self.error(f"accessors[{i}]: offset not aligned to component size")
                    stride = view.get("byteStride", size * ncomp)
                    needed = byte_offset + stride * (count - 1) + size * ncomp
                    if needed > view.get("byteLength", 0):
                        self.error(f"accessors[{i}]: needs {needed} bytes, view has "
                                   f"{view.get('byteLength', 0)}")
                    else:
                        data = buffer_data[view["buffer"]]
                        start = view.get("byteOffset", 0) + byte_offset
                        values = []
                        ok = start + stride * (count - 1) + size * ncomp <= len(data)
                        if ok:
                            for e in range(count):
                                base = start + e * stride
                                values.append(struct.unpack_from("<" + fmt * ncomp, data, base))
            accessor_values.append(values)

            # POSITION accessors must carry exact min/max; checked below via
            # mesh attributes, but validate shape here when present.
            for bound in ("min", "max"):
                if bound in acc and len(acc[bound]) != TYPE_COUNTS.get(atype, 0):
                    self.error(f"accessors[{i}]: {bound} has wrong arity")

        for i, img in enumerate(images):
            uri = img.get("uri")
            if uri is None and "bufferView" not in img:
                self.error(f"images[{i}]: needs uri or bufferView")
            if uri is not None:
                full = os.path.join(self.dir, uri)
                if not os.path.exists(full):
                    self.error(f"images[{i}]: uri {uri} does not exist")
                elif full.endswith(".png"):
                    with open(full, "rb") as f:
                        if f.read(8) != b"\x89PNG\r\n\x1a\n":
                            self.error(f"images[{i}]: {uri} is not a PNG")

        for i, smp in enumerate(samplers):
            if "magFilter" in smp and smp["magFilter"] not in FILTERS_MAG:
                self.error(f"samplers[{i}]: bad magFilter")
            if "minFilter" in smp and smp["minFilter"] not in FILTERS_MIN:
                self.error(f"samplers[{i}]: bad minFilter")
            for wrap in ("wrapS", "wrapT"):
                if wrap in smp and smp[wrap] not in WRAPS:
                    self.error(f"samplers[{i}]: bad {wrap}")

        for i, tex in enumerate(textures):
            if "source" in tex:
                self.check_index(tex["source"], "images", len(images), f"textures[{i}]")
            if "sampler" in tex:
                self.check_index(tex["sampler"], "samplers", len(samplers), f"textures[{i}]")

        for i, mat in enumerate(materials):
            if "alphaMode" in mat and mat["alphaMode"] not in ALPHA_MODES:
                self.error(f"materials[{i}]: bad alphaMode {mat['alphaMode']}")
            if "alphaCutoff" in mat and mat.get("alphaMode") != "MASK":
                self.warn(f"materials[{i}]: alphaCutoff without MASK mode")
            pbr = mat.get("pbrMetallicRoughness", {})
            tex_info = pbr.get("baseColorTexture")
            if tex_info is not None:
                if "index" not in tex_info:
                    self.error(f"materials[{i}]: baseColorTexture.index is required")
                else:
                    self.check_index(tex_info["index"], "textures", len(textures),
                                     f"materials[{i}]")
            factor = pbr.get("baseColorFactor")
            if factor is not None:
                if len(factor) != 4 or any(not (0 <= v <= 1) for v in factor):
                    self.error(f"materials[{i}]: baseColorFactor out of range")

        for i, mesh in enumerate(meshes):
            prims = mesh.get("primitives")
            if not prims:
                self.error(f"meshes[{i}]: primitives are required")
                continue
            for j, prim in enumerate(prims):
                ctx = f"meshes[{i}].primitives[{j}]"
                attrs = prim.get("attributes")
                if not attrs or "POSITION" not in attrs:
                    self.error(f"{ctx}: POSITION attribute is required")
                    continue
                if prim.get("mode", 4) not in PRIMITIVE_MODES:
                    self.error(f"{ctx}: invalid mode")
                counts = set()
                for name, idx in attrs.items():
                    if not self.check_index(idx, "accessors", len(accessors), ctx):
                        continue
                    counts.add(accessors[idx].get("count", 0))
                if len(counts) > 1:
                    self.error(f"{ctx}: attribute accessors disagree on count")
                pos_acc = accessors[attrs["POSITION"]]
                if pos_acc.get("type") != "VEC3" or pos_acc.get("componentType") != 5126:
                    self.error(f"{ctx}: POSITION must be float VEC3")
                if "min" not in pos_acc or "max" not in pos_acc:
                    self.error(f"{ctx}: POSITION accessor needs min and max")
                else:
                    values = accessor_values[attrs["POSITION"]]
                    if values:
                        for c in range(3):
                            lo = min(v[c] for v in values)
                            hi = max(v[c] for v in values)
                            if not math.isclose(lo, pos_acc["min"][c], abs_tol=1e-5):
                                self.error(f"{ctx}: POSITION min[{c}] is {pos_acc['min'][c]}, "
                                           f"data says {lo}")
                            if not math.isclose(hi, pos_acc["max"][c], abs_tol=1e-5):
                                self.error(f"{ctx}: POSITION max[{c}] is {pos_acc['max'][c]}, "
                                           f"data says {hi}")
                if "indices" in prim:
                    if self.check_index(prim["indices"], "accessors", len(accessors), ctx):
                        iacc = accessors[prim["indices"]]
                        if iacc.get("type") != "SCALAR":
                            self.error(f"{ctx}: index accessor must be SCALAR")
                        if iacc.get("componentType") not in (5121, 5123, 5125):
                            self.error(f"{ctx}: invalid index componentType")
                        if iacc.get("count", 0) % 3 != 0 and prim.get("mode", 4) == 4:
                            self.error(f"{ctx}: triangle index count not divisible by 3")
                        ivals = accessor_values[prim["indices"]]
                        vcount = pos_acc.get("count", 0)
                        if ivals:
                            top = max(v[0] for v in ivals)
                            if top >= vcount:
                                self.error(f"{ctx}: index {top} exceeds vertex count {vcount}")
                if "material" in prim:
                    if self.check_index(prim["material"], "materials", len(materials), ctx):
                        mat = materials[prim["material"]]
                        uses_tex = "baseColorTexture" in mat.get("pbrMetallicRoughness", {})
                        if uses_tex and "TEXCOORD_0" not in attrs:
                            self.error(f"{ctx}: textured material without TEXCOORD_0")

        for i, node in enumerate(nodes):
            if "mesh" in node:
                self.check_index(node["mesh"], "meshes", len(meshes), f"nodes[{i}]")
            for child in node.get("children", []):
                self.check_index(child, "nodes", len(nodes), f"nodes[{i}]")

        if "scene" in doc:
            self.check_index(doc["scene"], "scenes", len(scenes), "scene")
        for i, scene in enumerate(scenes):
            for idx in scene.get("nodes", []):
                self.check_index(idx, "nodes", len(nodes), f"scenes[{i}]")

        return not self.errors


def main():
    if len(sys.argv) != 2:
        print(__doc__)
        return 64
    v = Validator(sys.argv[1])
    ok = v.run()
    for e in v.errors:
        print(f"ERROR: {e}")
    for w in v.warnings:
        print(f"warning: {w}")
    print(f"{len(v.errors)} errors, {len(v.warnings)} warnings")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
