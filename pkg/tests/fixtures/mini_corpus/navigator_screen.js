var agent = navigator.userAgent;
var plat = navigator.platform;
var lang = navigator.language;
var app = navigator.appName;
var cores = navigator["hardwareConcurrency"];
var sw = screen.width;
var sh = screen.height;
var aw = screen.availWidth;
var ah = screen.availHeight;
var depth = screen.colorDepth;
let grade = "";
if (depth > 16) { grade = "deep"; } else { grade = "shallow"; }
var joined = agent + "|" + plat + "|" + lang + "|" + app + "|" + cores;
var dims = sw + "x" + sh + "/" + aw + "x" + ah + "@" + depth + ":" + grade;
console.log("nav summary", joined.length);
console.log("screen summary", dims);
window.__fp_hash = __sha256hex(joined + "||" + dims);
